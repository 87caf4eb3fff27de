//! Command-line front end.
//!
//! ```text
//! qlevy sample      --k 4 --h 0.01 --eta pow:1:2 --algo 2 --d 16 --n 10 --seed 42 --out s.csv
//! qlevy convergence --algo 1 --d 4..64 --n 10000
//! qlevy verify      --k 4 --n 10000
//! ```
//!
//! `--d` accepts a single index, a comma-separated grid, a doubling range
//! `a..b`, or `auto` (smallest index that preserves order `--gamma`).
//! Output goes to `--out` or standard output. Exit status: 0 on success, 1
//! when a verification check fails, 2 on usage errors, 3 on runtime errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::covariance::{make_model, CovarianceModel, SpectrumSpec};
use crate::error::{Error, Result};
use crate::harness::{
    cholesky_suite, convergence, identity_suite, moment_suite, replicate_area, replicate_increment,
    CheckKind, SuiteReport, MIN_REPLICATES,
};
use crate::levyarea::{choose_d, Algorithm, DRule};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qlevy", version, about = "Lévy areas and iterated integrals for Q-Wiener processes")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Sample increments and Lévy areas.
    Sample(CommonArgs),
    /// Estimate the mean-square error over a D-grid and fit its slope.
    Convergence(CommonArgs),
    /// Run the moment, identity and closed-form factor checks.
    Verify(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Number of retained modes K.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Step size h.
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    /// Spectrum: pow:c:rho or list:a,b,...
    #[arg(long, default_value = "pow:1:2")]
    eta: String,
    /// Algorithm: 1 (truncated series) or 2 (series plus Gaussian tail).
    #[arg(long, default_value = "1")]
    algo: String,
    /// Truncation index: N, a,b,c, a..b (doubling) or auto.
    #[arg(long, default_value = "auto")]
    d: String,
    /// Target mean-square order for --d auto.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Replicates (default: 10 for sample, 1000 for convergence, 10000 for verify).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Sample,
    Convergence,
    Verify,
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: CovarianceModel,
    pub h: f64,
    pub algorithm: Algorithm,
    /// Strictly increasing truncation indices.
    pub d_grid: Vec<u64>,
    pub gamma: f64,
    pub n: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub workers: usize,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

/// Parses and validates `argv` (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| usage(e.to_string()))?;
    build_config(cli)
}

fn build_config(cli: Cli) -> Result<RunConfig> {
    let (command, a) = match cli.command {
        Cmd::Sample(a) => (Command::Sample, a),
        Cmd::Convergence(a) => (Command::Convergence, a),
        Cmd::Verify(a) => (Command::Verify, a),
    };
    if a.k == 0 {
        return Err(usage("--k must be positive"));
    }
    if !(a.h > 0.0 && a.h.is_finite()) {
        return Err(usage(format!("--h must be positive, got {}", a.h)));
    }
    if !(a.gamma > 0.0 && a.gamma.is_finite()) {
        return Err(usage(format!("--gamma must be positive, got {}", a.gamma)));
    }
    if a.workers == 0 {
        return Err(usage("--workers must be positive"));
    }
    let spec: SpectrumSpec = a.eta.parse().map_err(|e: Error| usage(e.to_string()))?;
    let model = make_model(&spec, a.k).map_err(|e| usage(e.to_string()))?;
    let algorithm: Algorithm = a.algo.parse().map_err(|e: Error| usage(e.to_string()))?;
    let d_grid = parse_d(&a.d, algorithm, a.h, a.gamma, &model)?;
    let n = a.n.unwrap_or(match command {
        Command::Sample => 10,
        Command::Convergence => MIN_REPLICATES,
        Command::Verify => 10_000,
    });
    if n == 0 {
        return Err(usage("--n must be positive"));
    }
    match command {
        Command::Convergence if n < MIN_REPLICATES => {
            return Err(usage(format!("convergence needs --n >= {MIN_REPLICATES}")));
        }
        Command::Convergence if model.k() < 2 => {
            return Err(usage("convergence needs --k >= 2"));
        }
        Command::Sample | Command::Verify if d_grid.len() != 1 => {
            return Err(usage("sample and verify take a single --d"));
        }
        _ => {}
    }
    Ok(RunConfig {
        command,
        model,
        h: a.h,
        algorithm,
        d_grid,
        gamma: a.gamma,
        n,
        seed: a.seed,
        out: a.out,
        workers: a.workers,
    })
}

/// Resolves the `--d` argument. For the second algorithm `auto` takes the
/// smaller of the two sufficient bounds.
pub fn parse_d(s: &str, algorithm: Algorithm, h: f64, gamma: f64, model: &CovarianceModel) -> Result<Vec<u64>> {
    let int = |t: &str| {
        t.trim()
            .parse::<u64>()
            .map_err(|_| usage(format!("malformed truncation index {t:?}")))
    };
    let grid = if s == "auto" {
        let d = match algorithm {
            Algorithm::Alg1 => choose_d(DRule::Alg1, h, gamma, model)?,
            Algorithm::Alg2 => choose_d(DRule::Alg2K, h, gamma, model)?
                .min(choose_d(DRule::Alg2Eta, h, gamma, model)?),
        };
        vec![d]
    } else if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi) = (int(lo)?, int(hi)?);
        if lo == 0 || hi < lo {
            return Err(usage(format!("range {s:?} must satisfy 1 <= a <= b")));
        }
        std::iter::successors(Some(lo), |d| d.checked_mul(2))
            .take_while(|d| *d <= hi)
            .collect()
    } else {
        s.split(',').map(int).collect::<Result<Vec<u64>>>()?
    };
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage(format!("D-grid {s:?} must be strictly increasing")));
    }
    Ok(grid)
}

/// Executes a configuration and returns the exit status.
pub fn run(config: &RunConfig) -> i32 {
    match execute(config) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

/// Parses `argv`, runs it and returns the exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match build_config(cli) {
        Ok(config) => run(&config),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn open_output(config: &RunConfig) -> Result<Box<dyn Write>> {
    Ok(match &config.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn execute(config: &RunConfig) -> Result<bool> {
    match config.command {
        Command::Sample => {
            write_samples(config, open_output(config)?)?;
            Ok(true)
        }
        Command::Convergence => {
            let report = convergence(
                &config.model,
                config.h,
                config.algorithm,
                &config.d_grid,
                config.n,
                config.seed,
                config.workers,
            )?;
            report.write_csv(open_output(config)?)?;
            if let Some((slope, intercept)) = report.fit {
                eprintln!("slope {slope} intercept {intercept} ({})", report.slope_group());
            }
            Ok(true)
        }
        Command::Verify => {
            let report = verify(config)?;
            write_checks(&report, open_output(config)?)?;
            for c in report.failures() {
                eprintln!("FAILED: {}", c.name);
            }
            Ok(report.passed())
        }
    }
}

/// One row per increment coefficient and per Lévy area.
fn write_samples<W: Write>(config: &RunConfig, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replicate", "kind", "i", "j", "value"])?;
    let d = config.d_grid[0];
    for rep in 0..config.n as u64 {
        let inc = replicate_increment(&config.model, config.h, config.seed, rep)?;
        let area = replicate_area(&config.model, &inc, d, config.algorithm, config.seed, rep)?;
        for (i, x) in inc.dw().iter().enumerate() {
            w.write_record([rep.to_string(), "increment".into(), (i + 1).to_string(), String::new(), x.to_string()])?;
        }
        for (&(i, j), x) in area.map.pairs().iter().zip(&area.values) {
            w.write_record([rep.to_string(), "area".into(), i.to_string(), j.to_string(), x.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn verify(config: &RunConfig) -> Result<SuiteReport> {
    let (model, h, d, n, seed, workers) = (
        &config.model,
        config.h,
        config.d_grid[0],
        config.n,
        config.seed,
        config.workers,
    );
    let mut report = moment_suite(model, h, d, n, seed, config.algorithm, workers)?;
    for alg in [Algorithm::Alg1, Algorithm::Alg2] {
        report.extend(identity_suite(model, h, d, n.min(1000), seed, alg, workers)?);
    }
    if model.k() >= 2 {
        report.extend(cholesky_suite(model, h, n.min(1000), seed, workers)?);
    }
    Ok(report)
}

fn write_checks<W: Write>(report: &SuiteReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["check", "value", "reference", "score", "passed"])?;
    for c in &report.checks {
        let (value, reference, score) = match c.kind {
            CheckKind::Statistical {
                estimate,
                expected,
                z,
            } => (estimate.mean, expected, z),
            CheckKind::Deterministic { worst, tol } => (worst, tol, worst),
        };
        w.write_record([
            c.name.clone(),
            value.to_string(),
            reference.to_string(),
            score.to_string(),
            c.passed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
