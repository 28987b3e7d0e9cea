//! Optimal nested procedure over the full two-dimensional state space.
//!
//! `H[n]` is the expected number of tests for a binomial pool of `n`, and
//! `G[m, n]` for a defective set of `m` next to a pool of `n`. When a subtest
//! of a defective set comes back positive, the untested remainder rejoins the
//! pool:
//!
//! ```text
//! G[1, n] = H[n]
//! G[m, n] = 1 + min_{1<=x<m} neg(m,x) G[m-x, n] + pos(m,x) G[x, m-x+n]
//! H[n]    = min_{1<=x<=n}  1 + q^x H[n-x] + (1-q^x) G[x, n-x]
//! ```
//!
//! `G` is stored triangularly by total `s = m + n`, row `s` holding
//! `m = 1..=s`. Rows are filled in increasing `s` and, within a row, increasing
//! `m`: the positive branch reads `(x, s)` with `x < m` from the current row
//! and the negative branch reads rows `< s`.
//!
//! The negative branch walks `G[., n]` at fixed `n`, which is strided in the
//! `s`-major layout, so the build keeps a second, `n`-major copy of `G`
//! pre-multiplied by `1 - q^m`. Both inner scans then run over contiguous memory.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{DefectiveState, PowerKernel, Prevalence, Procedure, State};
use crate::policy::Policy;

/// Default cap on the memory the R1 build may allocate: 2 GiB.
pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;

const WINDOW_RADIUS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct R1Options {
    /// For defective-set states, scan windows around neighbouring states'
    /// argmins and the range ends, widening each while its minimum sits on the
    /// window edge, instead of the full range.
    pub windowed: bool,
    /// Bytes the build may allocate for its planes.
    pub memory_budget: u64,
}

impl Default for R1Options {
    fn default() -> Self {
        R1Options {
            windowed: false,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

#[inline]
fn tri(k: usize) -> usize {
    k * (k + 1) / 2
}

/// Number of `(m, n)` states with `m >= 1` and `m + n <= n_top`.
pub fn triangular_states(n_top: usize) -> usize {
    tri(n_top)
}

/// Peak bytes allocated while building a table for `n_top`.
pub fn build_footprint(n_top: usize) -> u128 {
    let states = tri(n_top) as u128;
    let line = n_top as u128 + 1;
    // g, the n-major mirror and choice_g; then h, choice_h and both kernel arrays
    states * (8 + 8 + 4) + line * (8 + 4 + 8 + 8)
}

/// Expected-test and argmin tables of the optimal nested procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct R1Table {
    prevalence: Prevalence,
    n_top: usize,
    h: Vec<f64>,
    g: Vec<f64>,
    choice_h: Vec<u32>,
    choice_g: Vec<u32>,
    pq: Vec<f64>,
    omq: Vec<f64>,
}

impl R1Table {
    pub fn build(prevalence: Prevalence, n_top: usize, options: R1Options) -> Result<Self> {
        Self::build_with_kernel(
            &PowerKernel::for_population(prevalence, n_top),
            n_top,
            options,
        )
    }

    pub fn build_with_kernel(
        kernel: &PowerKernel,
        n_top: usize,
        options: R1Options,
    ) -> Result<Self> {
        if n_top > u32::MAX as usize {
            return Err(Error::Capacity {
                requested: n_top,
                capacity: u32::MAX as usize,
            });
        }
        let states = n_top
            .checked_add(1)
            .and_then(|t| t.checked_mul(n_top))
            .map(|t| t / 2);
        let bytes = build_footprint(n_top);
        let states = match states {
            Some(s) if bytes <= options.memory_budget as u128 => s,
            _ => {
                return Err(Error::MemoryBudget {
                    n_top,
                    states: states.unwrap_or(usize::MAX),
                    bytes,
                    budget: options.memory_budget,
                })
            }
        };
        let prevalence = kernel.prevalence();
        let (pq, omq) = kernel.tables(n_top + 1)?;

        let mut h = vec![0.0; n_top + 1];
        let mut choice_h = vec![0u32; n_top + 1];
        let mut g = vec![0.0; states];
        let mut choice_g = vec![0u32; states];
        // n-major copy: row n holds omq[m] * G[m, n] for m = 1..=n_top-n
        let mut w = vec![0.0; states];
        let w_off = |n: usize| n * n_top - n * n.saturating_sub(1) / 2;

        for s in 1..=n_top {
            let row = tri(s - 1);
            g[row] = h[s - 1];
            w[w_off(s - 1)] = omq[1] * h[s - 1];

            for m in 2..=s {
                let n = s - m;
                let wrow = w_off(n);
                let (head, tail) = g[row..row + m].split_at_mut(m - 1);
                let neg = &w[wrow..wrow + m - 1];
                let (sum, x) = if options.windowed {
                    // neighbours (m-1, n+1) in this row and (m, n-1) in the previous one
                    let left = if m > 2 { choice_g[row + m - 2] } else { 1 };
                    let below = if n > 0 {
                        choice_g[Self::g_index(m, n - 1)]
                    } else {
                        1
                    };
                    let hints = [left as usize - 1, below as usize - 1];
                    windowed_scan(&pq[1..m], neg, &omq[1..m], head, &hints)
                } else {
                    scan(&pq[1..m], neg, &omq[1..m], head)
                };
                let v = 1.0 + sum / omq[m];
                tail[0] = v;
                choice_g[row + m - 1] = (x + 1) as u32;
                w[wrow + m - 1] = omq[m] * v;
            }

            // binomial rows are O(s) each, always scanned in full
            let grow = &g[row..row + s];
            let (sum, x) = scan(&pq[1..=s], &h[..s], &omq[1..=s], grow);
            h[s] = 1.0 + sum;
            choice_h[s] = (x + 1) as u32;
        }

        Ok(R1Table {
            prevalence,
            n_top,
            h,
            g,
            choice_h,
            choice_g,
            pq,
            omq,
        })
    }

    /// Rebuilds a table from stored planes; lengths must match `n_top`.
    pub fn from_planes(
        prevalence: Prevalence,
        n_top: usize,
        h: Vec<f64>,
        g: Vec<f64>,
        choice_h: Vec<u32>,
        choice_g: Vec<u32>,
    ) -> Result<Self> {
        let states = tri(n_top);
        if h.len() != n_top + 1
            || choice_h.len() != n_top + 1
            || g.len() != states
            || choice_g.len() != states
        {
            return Err(Error::Domain("R1 plane length does not match n_top"));
        }
        let (pq, omq) = PowerKernel::new(prevalence, n_top).tables(n_top + 1)?;
        Ok(R1Table {
            prevalence,
            n_top,
            h,
            g,
            choice_h,
            choice_g,
            pq,
            omq,
        })
    }

    #[inline]
    fn g_index(m: usize, n: usize) -> usize {
        tri(m + n - 1) + m - 1
    }

    #[inline]
    fn g_at(&self, m: usize, n: usize) -> f64 {
        self.g[Self::g_index(m, n)]
    }

    pub fn prevalence(&self) -> Prevalence {
        self.prevalence
    }

    pub fn n_top(&self) -> usize {
        self.n_top
    }

    fn check_total(&self, s: usize) -> Result<()> {
        if s > self.n_top {
            Err(Error::OutOfRange {
                index: s,
                limit: self.n_top,
            })
        } else {
            Ok(())
        }
    }

    /// Memoized expected remaining tests for a state.
    pub fn value(&self, state: impl Into<State>) -> Result<f64> {
        match state.into() {
            State::Binomial(b) => {
                self.check_total(b.n)?;
                Ok(self.h[b.n])
            }
            State::Defective(d) => {
                self.check_total(d.m().saturating_add(d.n()))?;
                Ok(self.g_at(d.m(), d.n()))
            }
        }
    }

    /// Expected tests to classify `n` units.
    pub fn expected(&self, n: usize) -> Result<f64> {
        self.check_total(n)?;
        Ok(self.h[n])
    }

    pub fn first_test_size(&self, n: usize) -> Result<usize> {
        self.check_total(n)?;
        if n == 0 {
            return Err(Error::Domain("no test is needed for an empty population"));
        }
        Ok(self.choice_h[n] as usize)
    }

    /// Optimal subtest size for a defective set of `m >= 2` next to a pool of `n`.
    pub fn defective_choice(&self, state: DefectiveState) -> Result<usize> {
        self.check_total(state.m().saturating_add(state.n()))?;
        if state.m() < 2 {
            return Err(Error::Domain("a defective set of one needs no test"));
        }
        Ok(self.choice_g[Self::g_index(state.m(), state.n())] as usize)
    }

    /// `H[n]` re-evaluated with first group `x`, in the build's exact arithmetic.
    pub fn candidate_h(&self, n: usize, x: usize) -> f64 {
        1.0 + (self.pq[x] * self.h[n - x] + self.omq[x] * self.g_at(x, n - x))
    }

    /// `G[m, n]` re-evaluated with subtest size `x`, in the build's exact arithmetic.
    pub fn candidate_g(&self, m: usize, n: usize, x: usize) -> f64 {
        let neg = self.omq[m - x] * self.g_at(m - x, n);
        let sum = self.pq[x] * neg + self.omq[x] * self.g_at(x, m - x + n);
        1.0 + sum / self.omq[m]
    }

    /// Values `H[0..=n_top]`.
    pub fn h_plane(&self) -> &[f64] {
        &self.h
    }

    /// Values `G` in `(s, m)` row order.
    pub fn g_plane(&self) -> &[f64] {
        &self.g
    }

    pub fn choice_h_plane(&self) -> &[u32] {
        &self.choice_h
    }

    pub fn choice_g_plane(&self) -> &[u32] {
        &self.choice_g
    }
}

impl Policy for R1Table {
    fn procedure(&self) -> Procedure {
        Procedure::R1
    }

    fn n_top(&self) -> usize {
        self.n_top
    }

    fn prevalence(&self) -> Prevalence {
        self.prevalence
    }

    fn pool_choice(&self, n: usize) -> usize {
        self.choice_h[n] as usize
    }

    fn defective_choice(&self, m: usize, pool: usize) -> usize {
        self.choice_g[Self::g_index(m, pool)] as usize
    }

    fn expected_tests(&self, n: usize) -> f64 {
        self.h[n]
    }
}

/// First minimizer over `j` of `a[j] * b[len-1-j] + c[j] * d[j]`.
///
/// Candidates are computed block by block into a stack buffer, the block
/// minimum is taken over four independent lanes, and only a block that
/// strictly improves on the running minimum is searched for the first index
/// attaining it. All three loops are branch-free except the last.
#[inline]
fn scan(a: &[f64], b_rev: &[f64], c: &[f64], d: &[f64]) -> (f64, usize) {
    const BLOCK: usize = 512;
    const LANES: usize = 8;
    let len = a.len();
    debug_assert!(len > 0);
    let (b, c, d) = (&b_rev[..len], &c[..len], &d[..len]);
    let mut buf = [0.0f64; BLOCK];
    let mut best = (f64::INFINITY, 0usize);
    let mut start = 0;
    while start < len {
        let width = BLOCK.min(len - start);
        let out = &mut buf[..width];
        let a = &a[start..start + width];
        let c = &c[start..start + width];
        let d = &d[start..start + width];
        let b = &b[len - start - width..len - start];
        for ((((o, &a), &b), &c), &d) in out.iter_mut().zip(a).zip(b.iter().rev()).zip(c).zip(d) {
            *o = a * b + c * d;
        }
        let mut lanes = [f64::INFINITY; LANES];
        let mut chunks = out.chunks_exact(LANES);
        for chunk in &mut chunks {
            for l in 0..LANES {
                lanes[l] = if chunk[l] < lanes[l] {
                    chunk[l]
                } else {
                    lanes[l]
                };
            }
        }
        let mut low = lanes
            .iter()
            .fold(f64::INFINITY, |m, &v| if v < m { v } else { m });
        for &v in chunks.remainder() {
            if v < low {
                low = v;
            }
        }
        if low < best.0 {
            let k = out.iter().position(|&v| v == low).unwrap();
            best = (low, start + k);
        }
        start += width;
    }
    best
}

/// [`scan`] over windows around each hint, each widened until its minimum is
/// interior or it covers the whole range, plus single-point probes at both
/// ends of the range. Ties go to the lower index.
fn windowed_scan(a: &[f64], b_rev: &[f64], c: &[f64], d: &[f64], hints: &[usize]) -> (f64, usize) {
    let len = a.len();
    let at = |j: usize| a[j] * b_rev[len - 1 - j] + c[j] * d[j];
    let mut best = (at(0), 0);
    let keep = |best: &mut (f64, usize), found: (f64, usize)| {
        if found.0 < best.0 || (found.0 == best.0 && found.1 < best.1) {
            *best = found;
        }
    };
    keep(&mut best, (at(len - 1), len - 1));
    for &hint in hints {
        let hint = hint.min(len - 1);
        let mut radius = WINDOW_RADIUS;
        let found = loop {
            let lo = hint.saturating_sub(radius);
            let hi = (hint + radius + 1).min(len);
            let (v, j) = scan(
                &a[lo..hi],
                &b_rev[len - hi..len - lo],
                &c[lo..hi],
                &d[lo..hi],
            );
            let j = lo + j;
            let on_edge = (j == lo && lo > 0) || (j + 1 == hi && hi < len);
            if !on_edge {
                break (v, j);
            }
            radius *= 2;
        };
        keep(&mut best, found);
    }
    best
}
