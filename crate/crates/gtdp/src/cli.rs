//! Command-line surface.
//!
//! Exit codes: 0 success, 1 failed reproduction claim (or I/O failure on
//! the output streams), 2 domain or usage error, 3 resource error
//! (memory or enumeration budget, cache I/O or corruption).

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gtdp_core::{info_bound, n_max, simulate, BoundReport, Prevalence, Procedure};
use serde::Serialize;

use crate::session::run_session;
use crate::store::{Cache, CACHE_ENV};
use crate::table::{obtain, ObtainError, Provenance, Table, TableSpec};
use crate::verify::{self, VerifyConfig, REFERENCE_Q};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CLAIM_FAILED: u8 = 1;
pub const EXIT_DOMAIN: u8 = 2;
pub const EXIT_RESOURCE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "gtdp", version, about = "Optimal nested group-testing designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expected tests, first test size and entropy bound for one population size.
    Value(ValueArgs),
    /// One row per population size: n, expected_tests, first_test.
    Table(TableArgs),
    /// Monte Carlo estimate of the test count on synthetic populations.
    Simulate(SimulateArgs),
    /// Run the reproduction suite; exits 1 if any claim fails.
    Verify(VerifyArgs),
    /// Interactive pooling session reading `+`, `-`, `state`, `quit`.
    Session(SessionArgs),
    /// Baselines: individual testing, best Dorfman group size, entropy bound, n_max.
    Bounds(BoundsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProcArg {
    R1,
    R3,
}

impl From<ProcArg> for Procedure {
    fn from(p: ProcArg) -> Procedure {
        match p {
            ProcArg::R1 => Procedure::R1,
            ProcArg::R3 => Procedure::R3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct CacheArgs {
    /// Table cache directory.
    #[arg(long, env = CACHE_ENV)]
    cache_dir: Option<PathBuf>,
    /// Neither read nor write cached tables.
    #[arg(long)]
    no_cache: bool,
}

impl CacheArgs {
    fn cache(&self) -> Option<Cache> {
        if self.no_cache {
            return None;
        }
        self.cache_dir
            .clone()
            .or_else(Cache::default_dir)
            .map(Cache::new)
    }
}

#[derive(Debug, Args)]
struct EngineArgs {
    #[arg(long = "proc", value_enum, default_value = "r3")]
    procedure: ProcArg,
    /// Probability that a unit is good.
    #[arg(long)]
    q: f64,
    /// R3: never test more than n_max(q) units at once.
    #[arg(long)]
    cap_to_nmax: bool,
    /// R1: windowed argmin search instead of the full scan.
    #[arg(long)]
    windowed: bool,
    /// R1 build memory budget in MiB.
    #[arg(long, default_value_t = 2048)]
    memory_budget_mib: u64,
    #[command(flatten)]
    cache: CacheArgs,
}

impl EngineArgs {
    fn spec(&self, n_top: usize) -> Result<TableSpec, CliError> {
        let prevalence = Prevalence::new(self.q)?;
        let mut spec = TableSpec::new(self.procedure.into(), prevalence, n_top);
        spec.cap_to_nmax = self.cap_to_nmax;
        spec.windowed = self.windowed;
        spec.memory_budget = self.memory_budget_mib.saturating_mul(1 << 20);
        Ok(spec)
    }

    fn obtain(&self, n_top: usize) -> Result<(Table, Provenance), CliError> {
        let spec = self.spec(n_top)?;
        Ok(obtain(&spec, self.cache.cache().as_ref())?)
    }
}

#[derive(Debug, Args)]
struct ValueArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

#[derive(Debug, Args)]
struct TableArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, default_value_t = 1)]
    from: usize,
    #[arg(long)]
    to: usize,
    #[arg(long, default_value_t = 1)]
    step: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Compute at this q instead (the reference values stay fixed); a negative control.
    #[arg(long, default_value_t = REFERENCE_Q)]
    q: f64,
    #[arg(long)]
    windowed: bool,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
    #[command(flatten)]
    cache: CacheArgs,
}

#[derive(Debug, Args)]
struct SessionArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    n: usize,
    /// Read outcomes from this file instead of stdin.
    #[arg(long)]
    script: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long)]
    q: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Engine(#[from] gtdp_core::Error),
    #[error(transparent)]
    Obtain(#[from] ObtainError),
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
    #[error("{0} claim(s) failed")]
    Claims(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Engine(e) | CliError::Obtain(ObtainError::Engine(e)) => {
                if e.is_resource() {
                    EXIT_RESOURCE
                } else {
                    EXIT_DOMAIN
                }
            }
            CliError::Obtain(ObtainError::Store(_)) => EXIT_RESOURCE,
            CliError::Usage(_) => EXIT_DOMAIN,
            CliError::Io { .. } | CliError::Claims(_) => EXIT_CLAIM_FAILED,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(source: io::Error) -> Self {
        CliError::Io {
            context: "writing output".into(),
            source,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        io::Error::from(e).into()
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_DOMAIN;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    let result = match cli.command {
        Command::Value(a) => cmd_value(a, stdout),
        Command::Table(a) => cmd_table(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Verify(a) => cmd_verify(a, stdout),
        Command::Session(a) => cmd_session(a, stdin, stdout),
        Command::Bounds(a) => cmd_bounds(a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            if !matches!(e, CliError::Claims(_)) {
                let _ = writeln!(stderr, "error: {e}");
            }
            e.exit_code()
        }
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

#[derive(Debug, Serialize)]
struct ValueReport {
    procedure: &'static str,
    q: f64,
    n: usize,
    expected_tests: f64,
    first_test: Option<usize>,
    info_bound: f64,
    from_cache: bool,
    elapsed_ms: f64,
}

fn cmd_value(a: ValueArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let t = Instant::now();
    let (table, prov) = a.engine.obtain(a.n)?;
    let r = ValueReport {
        procedure: table.procedure().name(),
        q: table.prevalence().q(),
        n: a.n,
        expected_tests: table.expected(a.n)?,
        first_test: table.first_test(a.n)?,
        info_bound: info_bound(table.prevalence(), a.n),
        from_cache: prov.from_cache,
        elapsed_ms: ms_since(t),
    };
    match a.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&r)?)?,
        Format::Csv => {
            writeln!(
                out,
                "procedure,q,n,expected_tests,first_test,info_bound,from_cache,elapsed_ms"
            )?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.procedure,
                r.q,
                r.n,
                r.expected_tests,
                r.first_test.map_or(String::new(), |x| x.to_string()),
                r.info_bound,
                r.from_cache,
                r.elapsed_ms
            )?;
        }
        Format::Human => {
            writeln!(out, "procedure      {}", r.procedure)?;
            writeln!(out, "q              {}", r.q)?;
            writeln!(out, "n              {}", r.n)?;
            writeln!(out, "expected tests {:.5}", r.expected_tests)?;
            match r.first_test {
                Some(x) => writeln!(out, "first test     {x}")?,
                None => writeln!(out, "first test     -")?,
            }
            writeln!(out, "info bound     {:.5}", r.info_bound)?;
            let source = match (&prov.path, prov.from_cache) {
                (Some(p), true) => format!("loaded from {}", p.display()),
                (Some(p), false) => format!("built, cached at {}", p.display()),
                (None, _) => "built".into(),
            };
            writeln!(out, "table          {source} ({:.1} ms)", prov.elapsed_ms)?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct Row {
    n: usize,
    expected_tests: f64,
    first_test: Option<usize>,
}

fn cmd_table(a: TableArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.step == 0 {
        return Err(CliError::Usage("--step must be positive".into()));
    }
    let rows = if a.from > a.to {
        a.engine.spec(0)?;
        Vec::new()
    } else {
        let (table, _) = a.engine.obtain(a.to)?;
        (a.from..=a.to)
            .step_by(a.step)
            .map(|n| {
                Ok(Row {
                    n,
                    expected_tests: table.expected(n)?,
                    first_test: table.first_test(n)?,
                })
            })
            .collect::<Result<Vec<_>, gtdp_core::Error>>()?
    };
    match a.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&rows)?)?,
        Format::Csv => {
            writeln!(out, "n,expected_tests,first_test")?;
            for r in &rows {
                let x = r.first_test.map_or(String::new(), |x| x.to_string());
                writeln!(out, "{},{},{}", r.n, r.expected_tests, x)?;
            }
        }
        Format::Human => {
            writeln!(
                out,
                "{:>8} {:>14} {:>10}",
                "n", "expected_tests", "first_test"
            )?;
            for r in &rows {
                let x = r.first_test.map_or("-".into(), |x| x.to_string());
                writeln!(out, "{:>8} {:>14.5} {:>10}", r.n, r.expected_tests, x)?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SimReport {
    procedure: &'static str,
    q: f64,
    n: usize,
    trials: u64,
    seed: u64,
    mean: f64,
    stderr: f64,
    expected_tests: f64,
    z: f64,
    misclassified: u64,
    elapsed_ms: f64,
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let t = Instant::now();
    let (table, _) = a.engine.obtain(a.n)?;
    let est = simulate(table.policy(), a.n, a.trials, a.seed)?;
    let expected = table.expected(a.n)?;
    let z = if est.stderr > 0.0 {
        (est.mean - expected) / est.stderr
    } else {
        0.0
    };
    let r = SimReport {
        procedure: table.procedure().name(),
        q: table.prevalence().q(),
        n: a.n,
        trials: est.trials,
        seed: est.seed,
        mean: est.mean,
        stderr: est.stderr,
        expected_tests: expected,
        z,
        misclassified: est.misclassified,
        elapsed_ms: ms_since(t),
    };
    match a.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&r)?)?,
        Format::Csv => {
            writeln!(
                out,
                "procedure,q,n,trials,seed,mean,stderr,expected_tests,z,misclassified,elapsed_ms"
            )?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.procedure,
                r.q,
                r.n,
                r.trials,
                r.seed,
                r.mean,
                r.stderr,
                r.expected_tests,
                r.z,
                r.misclassified,
                r.elapsed_ms
            )?;
        }
        Format::Human => {
            writeln!(
                out,
                "{} q={} n={}: mean {:.5} ± {:.5} over {} trials (seed {})",
                r.procedure, r.q, r.n, r.mean, r.stderr, r.trials, r.seed
            )?;
            writeln!(out, "table value {:.5}, z = {:.2}", r.expected_tests, r.z)?;
            writeln!(out, "misclassified trials: {}", r.misclassified)?;
        }
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = VerifyConfig {
        q: a.q,
        windowed: a.windowed,
        cache: a.cache.cache(),
    };
    let claims = verify::run(&config)?;
    let failed = claims.iter().filter(|c| !c.pass).count();
    match a.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&claims)?)?,
        Format::Csv => {
            writeln!(
                out,
                "id,pass,computed,reference,delta,tolerance,elapsed_ms,budget_ms"
            )?;
            let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
            for c in &claims {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    c.id,
                    c.pass,
                    c.computed,
                    opt(c.reference),
                    opt(c.delta),
                    opt(c.tolerance),
                    c.elapsed_ms,
                    opt(c.budget_ms)
                )?;
            }
        }
        Format::Human => {
            for c in &claims {
                let status = if c.pass { "PASS" } else { "FAIL" };
                write!(out, "{status} {:<18} computed {:>12.5}", c.id, c.computed)?;
                if let (Some(r), Some(d)) = (c.reference, c.delta) {
                    write!(out, "  reference {r:>12.5}  delta {d:+.2e}")?;
                }
                if c.elapsed_ms > 0.0 {
                    write!(out, "  {:.0} ms", c.elapsed_ms)?;
                    if let Some(b) = c.budget_ms {
                        write!(out, " (budget {b:.0} ms)")?;
                    }
                }
                writeln!(out)?;
                writeln!(out, "     {}", c.statement)?;
            }
            writeln!(
                out,
                "{} of {} claims passed",
                claims.len() - failed,
                claims.len()
            )?;
        }
    }
    if failed > 0 {
        return Err(CliError::Claims(failed));
    }
    Ok(())
}

fn cmd_session(
    a: SessionArgs,
    stdin: &mut dyn BufRead,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (table, _) = a.engine.obtain(a.n)?;
    let outcome = match &a.script {
        Some(path) => {
            let file = File::open(path).map_err(|source| CliError::Io {
                context: format!("opening {}", path.display()),
                source,
            })?;
            run_session(&table, a.n, BufReader::new(file), out)?
        }
        None => run_session(&table, a.n, stdin, out)?,
    };
    debug_assert!(outcome.state.partition_holds());
    Ok(())
}

fn cmd_bounds(a: BoundsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let prevalence = Prevalence::new(a.q)?;
    let r = BoundReport::new(prevalence, a.n);
    let nmax = n_max(prevalence);
    match a.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Bounds {
                q: f64,
                n: usize,
                n_max: u64,
                individual: f64,
                dorfman_best: f64,
                dorfman_best_k: usize,
                info_bound: f64,
            }
            let b = Bounds {
                q: r.q,
                n: r.n,
                n_max: nmax,
                individual: r.individual,
                dorfman_best: r.dorfman_best,
                dorfman_best_k: r.dorfman_best_k,
                info_bound: r.info_bound,
            };
            writeln!(out, "{}", serde_json::to_string_pretty(&b)?)?;
        }
        Format::Csv => {
            writeln!(
                out,
                "q,n,n_max,individual,dorfman_best,dorfman_best_k,info_bound"
            )?;
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.q, r.n, nmax, r.individual, r.dorfman_best, r.dorfman_best_k, r.info_bound
            )?;
        }
        Format::Human => {
            writeln!(out, "n_max          {nmax}")?;
            writeln!(out, "individual     {:.5}", r.individual)?;
            writeln!(
                out,
                "dorfman        {:.5} (k = {})",
                r.dorfman_best, r.dorfman_best_k
            )?;
            writeln!(out, "info bound     {:.5}", r.info_bound)?;
        }
    }
    Ok(())
}
