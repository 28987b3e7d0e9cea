use crate::model::{Prevalence, Procedure};

/// Size-based next-group rule induced by an engine's argmin tables.
///
/// Callers guarantee `n <= n_top()` for pool choices, `2 <= m` and
/// `m + pool <= n_top()` for defective-set choices.
pub trait Policy {
    fn procedure(&self) -> Procedure;

    fn n_top(&self) -> usize;

    fn prevalence(&self) -> Prevalence;

    /// Units to test from a binomial pool of `n >= 1`.
    fn pool_choice(&self, n: usize) -> usize;

    /// Units to test from a defective set of `m >= 2` sitting next to a pool.
    fn defective_choice(&self, m: usize, pool: usize) -> usize;

    /// Expected tests to classify `n` units from scratch.
    fn expected_tests(&self, n: usize) -> f64;
}

impl<P: Policy + ?Sized> Policy for &P {
    fn procedure(&self) -> Procedure {
        (**self).procedure()
    }

    fn n_top(&self) -> usize {
        (**self).n_top()
    }

    fn prevalence(&self) -> Prevalence {
        (**self).prevalence()
    }

    fn pool_choice(&self, n: usize) -> usize {
        (**self).pool_choice(n)
    }

    fn defective_choice(&self, m: usize, pool: usize) -> usize {
        (**self).defective_choice(m, pool)
    }

    fn expected_tests(&self, n: usize) -> f64 {
        (**self).expected_tests(n)
    }
}
