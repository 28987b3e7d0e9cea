//! Domain types shared by both engines, the oracle and the simulator, plus the
//! power kernel used to evaluate `q^k` and `1 - q^k` without cancellation.

use alloc::vec::Vec;

use crate::baselines::n_max;
use crate::error::{Error, Result};

/// Probability that a single unit is good.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prevalence {
    q: f64,
    ln_q: f64,
}

impl Prevalence {
    pub fn new(q: f64) -> Result<Self> {
        if !q.is_finite() || q <= 0.0 || q >= 1.0 {
            return Err(Error::InvalidPrevalence { q });
        }
        Ok(Prevalence {
            q,
            ln_q: libm::log(q),
        })
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Defect probability `1 - q`.
    #[inline]
    pub fn p(&self) -> f64 {
        1.0 - self.q
    }

    #[inline]
    pub fn ln_q(&self) -> f64 {
        self.ln_q
    }
}

/// Evaluates `q^k` and `1 - q^k` from the cached logarithm for `0 <= k <= capacity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerKernel {
    prevalence: Prevalence,
    capacity: usize,
}

impl PowerKernel {
    pub fn new(prevalence: Prevalence, capacity: usize) -> Self {
        PowerKernel {
            prevalence,
            capacity,
        }
    }

    /// Kernel able to serve a population of `n`: capacity `max(n, n_max(q))`.
    pub fn for_population(prevalence: Prevalence, n: usize) -> Self {
        let cap = usize::try_from(n_max(prevalence)).unwrap_or(usize::MAX);
        Self::new(prevalence, n.max(cap))
    }

    pub fn prevalence(&self) -> Prevalence {
        self.prevalence
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    fn check(&self, k: usize) -> Result<()> {
        if k > self.capacity {
            Err(Error::Capacity {
                requested: k,
                capacity: self.capacity,
            })
        } else {
            Ok(())
        }
    }

    pub fn pow_q(&self, k: usize) -> Result<f64> {
        self.check(k)?;
        Ok(self.pow_q_unchecked(k))
    }

    pub fn one_minus_pow_q(&self, k: usize) -> Result<f64> {
        self.check(k)?;
        Ok(self.one_minus_pow_q_unchecked(k))
    }

    #[inline]
    pub(crate) fn pow_q_unchecked(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        libm::exp(k as f64 * self.prevalence.ln_q)
    }

    #[inline]
    pub(crate) fn one_minus_pow_q_unchecked(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        -libm::expm1(k as f64 * self.prevalence.ln_q)
    }

    /// Probability that a subtest of `x` units drawn from a defective set of `m`
    /// is negative: `(q^x - q^m) / (1 - q^m)`.
    pub fn neg_branch_prob(&self, m: usize, x: usize) -> Result<f64> {
        check_subset(m, x)?;
        self.check(m)?;
        Ok(
            self.pow_q_unchecked(x) * self.one_minus_pow_q_unchecked(m - x)
                / self.one_minus_pow_q_unchecked(m),
        )
    }

    /// Probability that the same subtest is positive: `(1 - q^x) / (1 - q^m)`.
    pub fn pos_branch_prob(&self, m: usize, x: usize) -> Result<f64> {
        check_subset(m, x)?;
        self.check(m)?;
        Ok(self.one_minus_pow_q_unchecked(x) / self.one_minus_pow_q_unchecked(m))
    }

    /// Dense `q^k` and `1 - q^k` arrays for `k = 0..=len-1`.
    pub(crate) fn tables(&self, len: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if len > 0 {
            self.check(len - 1)?;
        }
        let pq = (0..len).map(|k| self.pow_q_unchecked(k)).collect();
        let omq = (0..len)
            .map(|k| self.one_minus_pow_q_unchecked(k))
            .collect();
        Ok((pq, omq))
    }
}

fn check_subset(m: usize, x: usize) -> Result<()> {
    if m < 2 || x == 0 || x >= m {
        Err(Error::Contract { m, x })
    } else {
        Ok(())
    }
}

/// `n` unclassified units, each independently good with probability `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BinomialState {
    pub n: usize,
}

/// A set of `m` units known to hold at least one defective, next to a binomial
/// pool of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DefectiveState {
    m: usize,
    n: usize,
}

impl DefectiveState {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("a defective set holds at least one unit"));
        }
        Ok(DefectiveState { m, n })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Either situation of a nested procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum State {
    Binomial(BinomialState),
    Defective(DefectiveState),
}

impl From<BinomialState> for State {
    fn from(s: BinomialState) -> Self {
        State::Binomial(s)
    }
}

impl From<DefectiveState> for State {
    fn from(s: DefectiveState) -> Self {
        State::Defective(s)
    }
}

/// Number of units to put in the next test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupChoice(usize);

impl GroupChoice {
    /// A first test of `x` units drawn from a pool of `n`.
    pub fn in_pool(n: usize, x: usize) -> Result<Self> {
        if x == 0 || x > n {
            return Err(Error::Domain("a pool test takes between 1 and n units"));
        }
        Ok(GroupChoice(x))
    }

    /// A subtest of `x` units from a defective set of `m >= 2`; must be a proper subset.
    pub fn in_defective_set(m: usize, x: usize) -> Result<Self> {
        check_subset(m, x)?;
        Ok(GroupChoice(x))
    }

    pub fn size(&self) -> usize {
        self.0
    }
}

/// Which nested procedure a table or executor follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Procedure {
    /// Optimal nested: remainders of a split defective set rejoin the pool.
    R1,
    /// Restricted nested: remainders are resolved as isolated subproblems.
    R3,
}

impl Procedure {
    pub fn tag(self) -> u8 {
        match self {
            Procedure::R1 => 1,
            Procedure::R3 => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(Procedure::R1),
            3 => Some(Procedure::R3),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Procedure::R1 => "r1",
            Procedure::R3 => "r3",
        }
    }
}

impl core::fmt::Display for Procedure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}
