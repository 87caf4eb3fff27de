//! Monte-Carlo estimation of the samplers' mean-square errors, moment and
//! identity checks, slope fitting and CSV reports.
//!
//! All estimators are deterministic functions of `(seed, configuration)`:
//! each replicate reads its own streams, results are collected in replicate
//! order and reduced with a fixed pairwise tree, so the worker count never
//! changes a report.

pub mod errors;
pub mod moments;
pub mod stats;

use std::io::Write;

use crate::assembly::{assemble, IteratedIntegralMatrix};
use crate::covariance::{sample_increment, CovarianceModel, WienerIncrement};
use crate::error::{invalid, Result};
use crate::levyarea::{sample_area_alg1, sample_area_alg2, Algorithm, LevyAreaSample};
use crate::streams::{Purpose, ReplicateStreams};

pub use errors::{
    alg1_mse_analytic, alg1_mse_mc, alg1_tail, alg2_mse_mc, eta_bound_check, reference_d, Alg1Row,
    Alg1Study, Alg2Row, Alg2Study, EtaBoundReport, EtaBoundRow, PairMse, MIN_REPLICATES,
};
pub use moments::{
    cholesky_suite, identity_suite, moment_suite, moment_suite_against, Check, CheckKind,
    SuiteReport,
};
pub use stats::McEstimate;

/// The Wiener increment of replicate `rep`.
pub fn replicate_increment(model: &CovarianceModel, h: f64, seed: u64, rep: u64) -> Result<WienerIncrement> {
    let mut rng = ReplicateStreams::new(seed, rep).rng(Purpose::Increment, 0);
    sample_increment(model, h, &mut rng)
}

/// Lévy areas of replicate `rep` for a given increment.
pub fn replicate_area(
    model: &CovarianceModel,
    inc: &WienerIncrement,
    d: u64,
    algorithm: Algorithm,
    seed: u64,
    rep: u64,
) -> Result<LevyAreaSample> {
    let mut src = ReplicateStreams::new(seed, rep);
    match algorithm {
        Algorithm::Alg1 => sample_area_alg1(model, inc, d, &mut src),
        Algorithm::Alg2 => sample_area_alg2(model, inc, d, &mut src),
    }
}

/// Increment and assembled iterated-integral matrix of replicate `rep`.
pub fn sample_step(
    model: &CovarianceModel,
    h: f64,
    d: u64,
    algorithm: Algorithm,
    seed: u64,
    rep: u64,
) -> Result<(WienerIncrement, IteratedIntegralMatrix)> {
    let inc = replicate_increment(model, h, seed, rep)?;
    let area = replicate_area(model, &inc, d, algorithm, seed, rep)?;
    let iim = assemble(&inc, &area, model)?;
    Ok((inc, iim))
}

/// Ordinary least squares of `log mse` on `log D`; returns
/// `(slope, intercept)`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(invalid(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(p) = points.iter().find(|(d, m)| !(*d > 0.0 && *m > 0.0 && d.is_finite() && m.is_finite())) {
        return Err(invalid(format!(
            "slope fit needs positive finite values, got ({}, {})",
            p.0, p.1
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("slope fit needs at least two distinct D values"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// One grid point of a [`ConvergenceReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub d: u64,
    pub mse: f64,
    pub stderr: f64,
    pub analytic: Option<f64>,
}

/// Mean-square error against `D` for one sampler and model.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub algorithm: Algorithm,
    pub model_summary: String,
    pub k: usize,
    pub h: f64,
    pub n: usize,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    /// Fitted slope and intercept; `None` when the grid has fewer than three
    /// points.
    pub fit: Option<(f64, f64)>,
}

impl ConvergenceReport {
    /// Label shared by the rows entering one slope fit.
    pub fn slope_group(&self) -> String {
        format!("{}-K{}-h{}", self.algorithm, self.k, self.h)
    }

    /// Writes the report as CSV with columns
    /// `algorithm,K,h,D,N,mse,stderr,analytic,slope_group,seed`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "algorithm", "K", "h", "D", "N", "mse", "stderr", "analytic", "slope_group", "seed",
        ])?;
        let group = self.slope_group();
        for r in &self.rows {
            w.write_record([
                self.algorithm.to_string(),
                self.k.to_string(),
                self.h.to_string(),
                r.d.to_string(),
                self.n.to_string(),
                r.mse.to_string(),
                r.stderr.to_string(),
                r.analytic.map(|a| a.to_string()).unwrap_or_default(),
                group.clone(),
                self.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean-square error over a `D`-grid: summed over pairs for the first
/// algorithm, the Frobenius functional for the second.
pub fn convergence(
    model: &CovarianceModel,
    h: f64,
    algorithm: Algorithm,
    d_grid: &[u64],
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<ConvergenceReport> {
    if model.k() < 2 {
        return Err(invalid("convergence studies need K >= 2"));
    }
    let rows: Vec<ReportRow> = match algorithm {
        Algorithm::Alg1 => alg1_mse_mc(model, h, d_grid, n, seed, workers)?
            .rows
            .into_iter()
            .map(|r| ReportRow {
                d: r.d,
                mse: r.total.mean,
                stderr: r.total.stderr,
                analytic: Some(r.total_analytic),
            })
            .collect(),
        Algorithm::Alg2 => alg2_mse_mc(model, h, d_grid, n, seed, workers)?
            .rows
            .into_iter()
            .map(|r| ReportRow {
                d: r.d,
                mse: r.estimate.mean,
                stderr: r.estimate.stderr,
                analytic: None,
            })
            .collect(),
    };
    let fit = if rows.len() >= 3 {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.d as f64, r.mse)).collect();
        Some(fit_slope(&pts)?)
    } else {
        None
    };
    Ok(ConvergenceReport {
        algorithm,
        model_summary: model.summary(),
        k: model.k(),
        h,
        n,
        seed,
        rows,
        fit,
    })
}
