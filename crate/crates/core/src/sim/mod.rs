//! Runs an engine's policy on synthetic populations.
//!
//! Trial `i` draws its population from a ChaCha8 stream keyed by
//! `(seed, i)`, so any trial can be replayed alone and the estimate does not
//! depend on the order or thread in which trials run. Per-trial test counts
//! are accumulated as exact integers, which makes the reduction independent
//! of how the trials were grouped.

mod exec;
mod labels;

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Geometric};

pub use exec::{ExecutionState, Step};
pub use labels::LabelSet;

use crate::error::{Error, Result};
use crate::model::Prevalence;
use crate::policy::Policy;

/// Monte Carlo estimate of a policy's test count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`; zero for a single trial.
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
    /// Trials whose final classification differed from the drawn truth.
    pub misclassified: u64,
}

/// Ascending labels of the defective units in trial `trial` of `seed`.
pub fn draw_population(prevalence: Prevalence, n: usize, seed: u64, trial: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    // gaps between defectives are geometric in the defect probability
    let gaps = Geometric::new(prevalence.p()).expect("0 < p < 1");
    let mut out = Vec::new();
    let mut pos: u64 = 0;
    loop {
        pos = pos.saturating_add(gaps.sample(&mut rng));
        if pos >= n as u64 {
            return out;
        }
        out.push(pos as u32);
        pos += 1;
    }
}

/// Result of one complete run of a policy against a known truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    /// Every tested group with its outcome, in order.
    pub steps: Vec<(LabelSet, bool)>,
    pub state: ExecutionState,
}

impl Run {
    pub fn tests_used(&self) -> u64 {
        self.state.tests_used()
    }
}

/// Runs `policy` on `n` units whose defectives are `defective` (ascending).
pub fn run_against<P: Policy + ?Sized>(
    policy: &P,
    n: usize,
    defective: &[u32],
    record: bool,
) -> Result<Run> {
    if n > policy.n_top() {
        return Err(Error::OutOfRange {
            index: n,
            limit: policy.n_top(),
        });
    }
    let mut state = ExecutionState::new(policy.procedure(), n);
    let mut steps = Vec::new();
    while let Step::Test(group) = state.next_group(policy)? {
        let positive = group.intersects_sorted(defective);
        state.apply_outcome(&group, positive)?;
        if record {
            steps.push((group, positive));
        }
    }
    Ok(Run { steps, state })
}

/// Runs `policy` on a fixed truth vector (`true` = defective), recording every step.
pub fn run_probe<P: Policy + ?Sized>(policy: &P, truth: &[bool]) -> Result<Run> {
    let defective: Vec<u32> = truth
        .iter()
        .enumerate()
        .filter(|(_, &d)| d)
        .map(|(i, _)| i as u32)
        .collect();
    run_against(policy, truth.len(), &defective, true)
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    trials: u64,
    sum: u128,
    sum_sq: u128,
    misclassified: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            trials: self.trials + o.trials,
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
            misclassified: self.misclassified + o.misclassified,
        }
    }
}

fn one_trial<P: Policy + ?Sized>(policy: &P, n: usize, seed: u64, trial: u64) -> Result<Tally> {
    let defective = draw_population(policy.prevalence(), n, seed, trial);
    let run = run_against(policy, n, &defective, false)?;
    let found = run.state.classified_defective();
    let correct = run.state.is_complete()
        && found.len() == defective.len()
        && defective.iter().all(|&d| found.contains(d));
    let t = run.tests_used() as u128;
    Ok(Tally {
        trials: 1,
        sum: t,
        sum_sq: t * t,
        misclassified: u64::from(!correct),
    })
}

/// Monte Carlo estimate of the expected number of tests `policy` needs for `n` units.
///
/// With the `std` feature trials run on the rayon pool; the result is
/// bitwise identical for any thread count.
pub fn simulate<P: Policy + Sync + ?Sized>(
    policy: &P,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<SimEstimate> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required"));
    }
    if n > policy.n_top() {
        return Err(Error::OutOfRange {
            index: n,
            limit: policy.n_top(),
        });
    }

    #[cfg(feature = "std")]
    let tally = {
        use rayon::prelude::*;
        (0..trials)
            .into_par_iter()
            .map(|i| one_trial(policy, n, seed, i))
            .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?
    };
    #[cfg(not(feature = "std"))]
    let tally = (0..trials).try_fold(Tally::default(), |acc, i| {
        Ok::<_, Error>(acc.merge(one_trial(policy, n, seed, i)?))
    })?;

    let count = tally.trials as f64;
    let mean = tally.sum as f64 / count;
    let stderr = if tally.trials > 1 {
        let k = tally.trials as u128;
        // exact: k * sum_sq - sum^2 = k^2 * population variance
        let spread = (k * tally.sum_sq - tally.sum * tally.sum) as f64;
        let var = spread / (count * (count - 1.0));
        libm::sqrt(var / count)
    } else {
        0.0
    };
    Ok(SimEstimate {
        mean,
        stderr,
        trials: tally.trials,
        seed,
        misclassified: tally.misclassified,
    })
}
