use alloc::vec::Vec;
use core::fmt;

/// Ordered set of unit labels, stored as sorted disjoint half-open runs.
///
/// Populations reach tens of thousands of units while the sets the policies
/// produce stay a handful of runs, so every operation is linear in runs.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct LabelSet {
    runs: Vec<(u32, u32)>,
    len: usize,
}

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Labels `start..end`.
    pub fn range(start: u32, end: u32) -> Self {
        let mut s = LabelSet::new();
        if start < end {
            s.runs.push((start, end));
            s.len = (end - start) as usize;
        }
        s
    }

    pub fn from_labels(labels: impl IntoIterator<Item = u32>) -> Self {
        let mut sorted: Vec<u32> = labels.into_iter().collect();
        sorted.sort_unstable();
        sorted.dedup();
        let mut s = LabelSet::new();
        for l in sorted {
            match s.runs.last_mut() {
                Some(last) if last.1 == l => last.1 += 1,
                _ => s.runs.push((l, l + 1)),
            }
            s.len += 1;
        }
        s
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn runs(&self) -> &[(u32, u32)] {
        &self.runs
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.runs.iter().flat_map(|&(a, b)| a..b)
    }

    pub fn contains(&self, label: u32) -> bool {
        let i = self.runs.partition_point(|&(_, end)| end <= label);
        self.runs.get(i).is_some_and(|&(start, _)| start <= label)
    }

    /// Splits off the `k` lowest labels, leaving the rest in `self`.
    pub fn take_front(&mut self, k: usize) -> LabelSet {
        assert!(k <= self.len, "cannot take {k} of {} labels", self.len);
        let mut front = LabelSet::new();
        let mut need = k;
        let mut consumed = 0;
        for run in self.runs.iter_mut() {
            if need == 0 {
                break;
            }
            let width = (run.1 - run.0) as usize;
            if width <= need {
                front.runs.push(*run);
                need -= width;
                consumed += 1;
            } else {
                let cut = run.0 + need as u32;
                front.runs.push((run.0, cut));
                run.0 = cut;
                need = 0;
            }
        }
        self.runs.drain(..consumed);
        front.len = k;
        self.len -= k;
        front
    }

    /// The `k` lowest labels, without modifying `self`.
    pub fn front(&self, k: usize) -> LabelSet {
        self.clone().take_front(k)
    }

    /// Adds every label of `other`; the sets must be disjoint.
    pub fn absorb(&mut self, other: LabelSet) {
        if other.is_empty() {
            return;
        }
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(self.runs.len() + other.runs.len());
        let (mut a, mut b) = (self.runs.iter().peekable(), other.runs.iter().peekable());
        loop {
            let next = match (a.peek(), b.peek()) {
                (Some(x), Some(y)) => {
                    if x.0 <= y.0 {
                        a.next()
                    } else {
                        b.next()
                    }
                }
                (Some(_), None) => a.next(),
                (None, Some(_)) => b.next(),
                (None, None) => break,
            };
            let &(s, e) = next.unwrap();
            match merged.last_mut() {
                Some(last) if last.1 >= s => {
                    debug_assert!(last.1 == s, "absorbing overlapping label sets");
                    last.1 = last.1.max(e);
                }
                _ => merged.push((s, e)),
            }
        }
        self.runs = merged;
        self.len += other.len;
    }

    /// Whether any label in `sorted` (ascending) belongs to the set.
    pub fn intersects_sorted(&self, sorted: &[u32]) -> bool {
        self.runs.iter().any(|&(s, e)| {
            let i = sorted.partition_point(|&d| d < s);
            sorted.get(i).is_some_and(|&d| d < e)
        })
    }
}

impl fmt::Debug for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.runs.iter().map(|&(a, b)| a..b))
            .finish()
    }
}
