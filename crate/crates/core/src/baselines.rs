//! Closed-form reference quantities: the largest useful first group, Dorfman's
//! two-stage cost and the binary-entropy lower bound.

use crate::error::{Error, Result};
use crate::model::Prevalence;

/// Window within which `ln(1-q)/ln(q)` is taken to be an exact integer.
pub const N_MAX_INTEGER_GUARD: f64 = 1e-9;

/// Largest group size that can be worth testing first, `ceil(ln(1-q) / ln(q))`.
///
/// A ratio within [`N_MAX_INTEGER_GUARD`] of an integer returns that integer,
/// so that exact cases such as `q = 0.5` do not pick up a spurious `+1`.
pub fn n_max(prevalence: Prevalence) -> u64 {
    // 1 - q is exact for q >= 0.5 and well conditioned below it.
    let ratio = libm::log(prevalence.p()) / prevalence.ln_q();
    let nearest = libm::round(ratio);
    let n = if (ratio - nearest).abs() <= N_MAX_INTEGER_GUARD {
        nearest
    } else {
        libm::ceil(ratio)
    };
    // float -> int casts saturate
    (n as u64).max(1)
}

/// Expected tests for Dorfman's procedure with groups of `k`: one pooled test
/// per group, then individual retests of positive groups. `n / k` is allowed
/// to be fractional.
pub fn dorfman_cost(prevalence: Prevalence, n: usize, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain("Dorfman group size must be at least 2"));
    }
    if k > n {
        return Err(Error::Domain("Dorfman group size cannot exceed n"));
    }
    let pow = libm::exp(k as f64 * prevalence.ln_q());
    Ok(n as f64 / k as f64 * (1.0 + k as f64 * (1.0 - pow)))
}

/// Best Dorfman group size over `k = 2..=min(n, max(n_max, 2))`, with its cost.
/// Ties go to the smaller `k`. `None` when `n < 2`.
pub fn dorfman_best(prevalence: Prevalence, n: usize) -> Option<(usize, f64)> {
    let upper = usize::try_from(n_max(prevalence))
        .unwrap_or(usize::MAX)
        .max(2);
    let mut best: Option<(usize, f64)> = None;
    for k in 2..=n.min(upper) {
        let c = dorfman_cost(prevalence, n, k).ok()?;
        if best.map_or(true, |(_, b)| c < b) {
            best = Some((k, c));
        }
    }
    best
}

/// Binary entropy in bits of a Bernoulli(`p`) outcome.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - p;
    -(p * libm::log2(p) + q * libm::log2(q))
}

/// Information lower bound on expected tests: `n` times the unit entropy.
pub fn info_bound(prevalence: Prevalence, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    n as f64 * binary_entropy(prevalence.p())
}

/// Baselines for one population size, for side-by-side comparison with the DP engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub q: f64,
    pub individual: f64,
    pub dorfman_best: f64,
    pub dorfman_best_k: usize,
    pub info_bound: f64,
}

impl BoundReport {
    pub fn new(prevalence: Prevalence, n: usize) -> Self {
        let individual = n as f64;
        let (k, d) = dorfman_best(prevalence, n).unwrap_or((n, individual));
        BoundReport {
            n,
            q: prevalence.q(),
            individual,
            dorfman_best: d,
            dorfman_best_k: k,
            info_bound: info_bound(prevalence, n),
        }
    }
}
