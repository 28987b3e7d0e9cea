//! Reproduction suite: every numerical claim checked against freshly built
//! (or cached) tables.

use std::time::Instant;

use gtdp_core::{info_bound, n_max, Prevalence, Procedure};
use serde::Serialize;

use crate::store::Cache;
use crate::table::{obtain, ObtainError, Table, TableSpec};

/// Prevalence at which the published values were computed.
pub const REFERENCE_Q: f64 = 0.9999;

/// Population sizes whose optimal restricted first test is the whole population.
pub const WHOLE_POOL_FIRST: [usize; 7] = [6765, 7000, 8000, 9000, 10_000, 10_500, 10_778];

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    /// Prevalence used for computation; the reference values stay those of `q = 0.9999`.
    pub q: f64,
    pub windowed: bool,
    pub cache: Option<Cache>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            q: REFERENCE_Q,
            windowed: false,
            cache: None,
        }
    }
}

/// One checked claim.
#[derive(Debug, Clone, Serialize)]
pub struct Claim {
    pub id: String,
    pub statement: String,
    pub computed: f64,
    /// Published or exact reference value; `None` for observational entries.
    pub reference: Option<f64>,
    pub tolerance: Option<f64>,
    pub delta: Option<f64>,
    pub pass: bool,
    pub elapsed_ms: f64,
    pub budget_ms: Option<f64>,
}

impl Claim {
    fn close(id: &str, statement: &str, computed: f64, reference: f64, tol: f64) -> Claim {
        let delta = computed - reference;
        Claim {
            id: id.into(),
            statement: statement.into(),
            computed,
            reference: Some(reference),
            tolerance: Some(tol),
            delta: Some(delta),
            pass: delta.abs() <= tol,
            elapsed_ms: 0.0,
            budget_ms: None,
        }
    }

    fn timed(mut self, elapsed_ms: f64, budget_ms: Option<f64>) -> Claim {
        self.elapsed_ms = elapsed_ms;
        self.budget_ms = budget_ms;
        if let Some(b) = budget_ms {
            self.pass &= elapsed_ms <= b;
        }
        self
    }
}

fn build(
    config: &VerifyConfig,
    procedure: Procedure,
    prevalence: Prevalence,
    n_top: usize,
) -> Result<(Table, f64), ObtainError> {
    let mut spec = TableSpec::new(procedure, prevalence, n_top);
    spec.windowed = config.windowed;
    let (table, prov) = obtain(&spec, config.cache.as_ref())?;
    Ok((table, prov.elapsed_ms))
}

/// Runs every claim. Failing claims are reported, not returned as errors;
/// errors mean a table could not be produced at all.
pub fn run(config: &VerifyConfig) -> Result<Vec<Claim>, ObtainError> {
    let prevalence = Prevalence::new(config.q)?;
    let mut claims = Vec::new();

    let (r3, r3_ms) = build(config, Procedure::R3, prevalence, 10_779)?;
    let e = |n| r3.expected(n);
    claims.push(
        Claim::close(
            "r3-6765",
            "restricted procedure, n = 6765: 12.94809 expected tests",
            e(6765)?,
            12.94809,
            1e-5,
        )
        .timed(r3_ms, Some(5_000.0)),
    );
    claims.push(Claim::close(
        "r3-10000",
        "restricted procedure, n = 10000: 19.20284 expected tests",
        e(10_000)?,
        19.20284,
        1e-5,
    ));
    claims.push(Claim::close(
        "r3-3235",
        "restricted procedure, n = 3235: 6.34621 expected tests",
        e(3235)?,
        6.34621,
        1e-5,
    ));
    let t = Instant::now();
    let split = match &r3 {
        Table::R3(t) => t.split_cost(&[6765, 3235])?,
        Table::R1(_) => unreachable!(),
    };
    claims.push(
        Claim::close(
            "split-sum",
            "splitting 10000 into 6765 + 3235 costs 12.94809 + 6.34621 = 19.2943",
            split,
            19.2943,
            2e-5,
        )
        .timed(t.elapsed().as_secs_f64() * 1e3, None),
    );
    claims.push(Claim::close(
        "split-penalty",
        "the split loses 0.09146 tests against testing all 10000 first",
        split - e(10_000)?,
        0.09146,
        2e-4,
    ));
    for n in WHOLE_POOL_FIRST {
        let x = r3.first_test(n)?.unwrap_or(0);
        claims.push(Claim::close(
            &format!("first-test-{n}"),
            &format!("for n = {n} <= 10778 the optimal first test takes all n units"),
            x as f64,
            n as f64,
            0.0,
        ));
    }
    let x = r3.first_test(10_779)?.unwrap_or(0);
    claims.push(Claim {
        id: "first-test-10779".into(),
        statement: "first test size just past the boundary (observational)".into(),
        computed: x as f64,
        reference: None,
        tolerance: None,
        delta: None,
        pass: (1..=10_779).contains(&x),
        elapsed_ms: 0.0,
        budget_ms: None,
    });
    claims.push(Claim::close(
        "n-max",
        "largest useful group ceil(ln(1-q)/ln q) = 92099",
        n_max(prevalence) as f64,
        92_099.0,
        0.0,
    ));

    let (r1, r1_ms) = build(config, Procedure::R1, prevalence, 6765)?;
    let h = r1.expected(6765)?;
    claims.push(
        Claim::close(
            "r1-6765",
            "optimal nested procedure, n = 6765: 10.14778 expected tests",
            h,
            10.14778,
            1e-5,
        )
        .timed(r1_ms, Some(900_000.0)),
    );
    claims.push(Claim::close(
        "r1-r3-gap",
        "remixing saves 12.94809 - 10.14778 = 2.80031 tests at n = 6765",
        e(6765)? - h,
        2.80031,
        2e-5,
    ));
    let bound = info_bound(prevalence, 6765);
    claims.push(Claim {
        id: "info-bound-6765".into(),
        statement: "entropy bound lies below the optimal nested value at n = 6765".into(),
        computed: bound,
        reference: Some(h),
        tolerance: None,
        delta: Some(bound - h),
        pass: bound <= h,
        elapsed_ms: 0.0,
        budget_ms: None,
    });
    Ok(claims)
}
