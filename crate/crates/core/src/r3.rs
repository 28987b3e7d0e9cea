//! Restricted nested procedure. After a positive subtest inside a defective
//! set, the untested remainder is resolved as its own binomial problem and is
//! never pooled with anything else, so the design for `t` units is assembled
//! from the designs for `1..t`.
//!
//! ```text
//! D[m] = min_{1<=x<m} 1 + neg(m,x) D[m-x] + pos(m,x) (D[x] + E[m-x])
//! E[n] = min_{1<=x<=X(n)} 1 + E[n-x] + (1 - q^x) D[x]
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::baselines::n_max;
use crate::error::{Error, Result};
use crate::model::{PowerKernel, Prevalence, Procedure};
use crate::policy::Policy;

/// Expected-test and argmin tables of the restricted procedure for `0..=n_top`.
#[derive(Debug, Clone, PartialEq)]
pub struct R3Table {
    prevalence: Prevalence,
    n_top: usize,
    e: Vec<f64>,
    d: Vec<f64>,
    choice_e: Vec<u32>,
    choice_d: Vec<u32>,
    pq: Vec<f64>,
    omq: Vec<f64>,
}

impl R3Table {
    /// Builds with a kernel sized by [`PowerKernel::for_population`].
    pub fn build(prevalence: Prevalence, n_top: usize, cap_to_nmax: bool) -> Result<Self> {
        Self::build_with_kernel(
            &PowerKernel::for_population(prevalence, n_top),
            n_top,
            cap_to_nmax,
        )
    }

    pub fn build_with_kernel(
        kernel: &PowerKernel,
        n_top: usize,
        cap_to_nmax: bool,
    ) -> Result<Self> {
        if n_top > u32::MAX as usize {
            return Err(Error::Capacity {
                requested: n_top,
                capacity: u32::MAX as usize,
            });
        }
        let prevalence = kernel.prevalence();
        let (pq, omq) = kernel.tables(n_top + 1)?;
        let cap = if cap_to_nmax {
            usize::try_from(n_max(prevalence)).unwrap_or(usize::MAX)
        } else {
            usize::MAX
        };
        let mut table = R3Table {
            prevalence,
            n_top,
            e: vec![0.0; n_top + 1],
            d: vec![0.0; n_top + 1],
            choice_e: vec![0; n_top + 1],
            choice_d: vec![0; n_top + 1],
            pq,
            omq,
        };
        for t in 1..=n_top {
            if t >= 2 {
                let (v, x) = first_min(1..t, |x| table.candidate_d(t, x));
                table.d[t] = v;
                table.choice_d[t] = x as u32;
            }
            let (v, x) = first_min(1..t.min(cap) + 1, |x| table.candidate_e(t, x));
            table.e[t] = v;
            table.choice_e[t] = x as u32;
        }
        Ok(table)
    }

    /// Rebuilds a table from stored planes; lengths must match `n_top`.
    pub fn from_planes(
        prevalence: Prevalence,
        n_top: usize,
        e: Vec<f64>,
        d: Vec<f64>,
        choice_e: Vec<u32>,
        choice_d: Vec<u32>,
    ) -> Result<Self> {
        let len = n_top + 1;
        if e.len() != len || d.len() != len || choice_e.len() != len || choice_d.len() != len {
            return Err(Error::Domain("R3 plane length does not match n_top"));
        }
        let (pq, omq) = PowerKernel::new(prevalence, n_top).tables(len)?;
        Ok(R3Table {
            prevalence,
            n_top,
            e,
            d,
            choice_e,
            choice_d,
            pq,
            omq,
        })
    }

    /// Cost of resolving a defective set of `m` by first testing `x` of its units,
    /// given the already-built entries below `m`.
    #[inline]
    pub fn candidate_d(&self, m: usize, x: usize) -> f64 {
        let inv = self.omq[m];
        let neg = self.pq[x] * self.omq[m - x] / inv;
        let pos = self.omq[x] / inv;
        1.0 + neg * self.d[m - x] + pos * (self.d[x] + self.e[m - x])
    }

    /// Cost of classifying `n` units by first testing `x` of them.
    #[inline]
    pub fn candidate_e(&self, n: usize, x: usize) -> f64 {
        1.0 + self.e[n - x] + self.omq[x] * self.d[x]
    }

    pub fn prevalence(&self) -> Prevalence {
        self.prevalence
    }

    pub fn n_top(&self) -> usize {
        self.n_top
    }

    fn check(&self, n: usize) -> Result<()> {
        if n > self.n_top {
            Err(Error::OutOfRange {
                index: n,
                limit: self.n_top,
            })
        } else {
            Ok(())
        }
    }

    /// Expected tests to classify `n` units.
    pub fn expected(&self, n: usize) -> Result<f64> {
        self.check(n)?;
        Ok(self.e[n])
    }

    /// Expected tests to resolve an isolated defective set of `m >= 1`.
    pub fn expected_defective(&self, m: usize) -> Result<f64> {
        if m == 0 {
            return Err(Error::Domain("a defective set holds at least one unit"));
        }
        self.check(m)?;
        Ok(self.d[m])
    }

    /// Size of the optimal first test for `n >= 1` units.
    pub fn first_test_size(&self, n: usize) -> Result<usize> {
        self.check(n)?;
        if n == 0 {
            return Err(Error::Domain("no test is needed for an empty population"));
        }
        Ok(self.choice_e[n] as usize)
    }

    /// Optimal subtest size for an isolated defective set of `m >= 2`.
    pub fn defective_choice(&self, m: usize) -> Result<usize> {
        self.check(m)?;
        if m < 2 {
            return Err(Error::Domain("a defective set of one needs no test"));
        }
        Ok(self.choice_d[m] as usize)
    }

    /// Total expected tests when the population is split into independent parts.
    pub fn split_cost(&self, parts: &[usize]) -> Result<f64> {
        if parts.is_empty() {
            return Err(Error::Domain("split needs at least one part"));
        }
        parts
            .iter()
            .try_fold(0.0, |acc, &n| Ok(acc + self.expected(n)?))
    }

    pub fn e_plane(&self) -> &[f64] {
        &self.e
    }

    pub fn d_plane(&self) -> &[f64] {
        &self.d
    }

    pub fn choice_e_plane(&self) -> &[u32] {
        &self.choice_e
    }

    pub fn choice_d_plane(&self) -> &[u32] {
        &self.choice_d
    }
}

impl Policy for R3Table {
    fn procedure(&self) -> Procedure {
        Procedure::R3
    }

    fn n_top(&self) -> usize {
        self.n_top
    }

    fn prevalence(&self) -> Prevalence {
        self.prevalence
    }

    fn pool_choice(&self, n: usize) -> usize {
        self.choice_e[n] as usize
    }

    fn defective_choice(&self, m: usize, _pool: usize) -> usize {
        self.choice_d[m] as usize
    }

    fn expected_tests(&self, n: usize) -> f64 {
        self.e[n]
    }
}

/// First minimizer over `range` under strict `<`.
fn first_min(range: core::ops::Range<usize>, f: impl Fn(usize) -> f64) -> (f64, usize) {
    let mut best = (f64::INFINITY, range.start);
    for x in range {
        let v = f(x);
        if v < best.0 {
            best = (v, x);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(q: f64, n: usize) -> R3Table {
        R3Table::build(Prevalence::new(q).unwrap(), n, false).unwrap()
    }

    #[test]
    fn small_cases_by_hand() {
        for q in [0.1, 0.5, 0.9, 0.9999] {
            let t = table(q, 3);
            assert_eq!(t.expected(0).unwrap(), 0.0);
            assert_eq!(t.expected(1).unwrap(), 1.0);
            assert_eq!(t.expected_defective(1).unwrap(), 0.0);
            // D[2] = 1 + 1/(1+q)
            assert!((t.expected_defective(2).unwrap() - (1.0 + 1.0 / (1.0 + q))).abs() < 1e-12);
        }
        let t = table(0.5, 4);
        assert!((t.expected_defective(2).unwrap() - 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(t.first_test_size(2).unwrap(), 1);
        assert_eq!(t.expected(2).unwrap(), 2.0);
    }

    #[test]
    fn published_instance_values() {
        let t = table(0.9999, 10_000);
        assert!((t.expected(6765).unwrap() - 12.94809).abs() < 1e-5);
        assert!((t.expected(3235).unwrap() - 6.34621).abs() < 1e-5);
        assert!((t.expected(10_000).unwrap() - 19.20284).abs() < 1e-5);
        assert_eq!(t.first_test_size(10_000).unwrap(), 10_000);
        let split = t.split_cost(&[6765, 3235]).unwrap();
        assert!((split - 19.2943).abs() < 2e-5);
        assert!((split - t.expected(10_000).unwrap() - 0.09146).abs() < 2e-4);
        assert_eq!(
            t.split_cost(&[10_000]).unwrap(),
            t.expected(10_000).unwrap()
        );
    }

    #[test]
    fn errors() {
        let t = table(0.9, 10);
        assert!(matches!(t.expected(11), Err(Error::OutOfRange { .. })));
        assert!(matches!(
            t.first_test_size(11),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(t.split_cost(&[]), Err(Error::Domain(_))));
        assert!(t.split_cost(&[3, 11]).is_err());
        let small = PowerKernel::new(Prevalence::new(0.9).unwrap(), 5);
        assert!(matches!(
            R3Table::build_with_kernel(&small, 10, false),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn one_step_consistency_and_choice_bounds() {
        for q in [0.5, 0.9, 0.99, 0.999] {
            let t = table(q, 300);
            for n in 1..=300 {
                let x = t.first_test_size(n).unwrap();
                assert!((1..=n).contains(&x));
                assert_eq!(t.candidate_e(n, x).to_bits(), t.e[n].to_bits());
                if n >= 2 {
                    let x = t.defective_choice(n).unwrap();
                    assert!((1..n).contains(&x));
                    assert_eq!(t.candidate_d(n, x).to_bits(), t.d[n].to_bits());
                }
                assert!(t.e[n] >= t.e[n - 1] && t.e[n] <= n as f64);
            }
        }
    }

    #[test]
    fn nmax_cap_is_inert_below_nmax() {
        let p = Prevalence::new(0.9).unwrap();
        let full = R3Table::build(p, 100, false).unwrap();
        let capped = R3Table::build(p, 100, true).unwrap();
        for n in 0..=100 {
            assert!(capped.choice_e[n] as u64 <= n_max(p));
            // n_max bounds the optimal first group, so capping changes nothing.
            assert_eq!(full.e[n].to_bits(), capped.e[n].to_bits());
        }
    }
}
