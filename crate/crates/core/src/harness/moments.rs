//! Distributional and pathwise checks on assembled iterated-integral
//! matrices, and the closed-form Cholesky factor check.

use std::f64::consts::PI;

use crate::assembly::IteratedIntegralMatrix;
use crate::covariance::CovarianceModel;
use crate::error::{invalid, Result};
use crate::harness::sample_step;
use crate::harness::stats::{estimate, run_replicates, McEstimate};
use crate::levyarea::{sigma_infinity, sqrt_sigma_infinity, tail_constant, Algorithm};
use crate::harness::replicate_increment;

/// `|z|` above which a statistical check fails.
pub const Z_LIMIT: f64 = 4.0;

/// Relative tolerance of the pathwise identities.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Relative tolerance of the Cholesky residual.
pub const CHOLESKY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum CheckKind {
    /// A sample mean compared with its exact expectation.
    Statistical {
        estimate: McEstimate,
        expected: f64,
        z: f64,
    },
    /// A worst-case relative deviation compared with a tolerance.
    Deterministic { worst: f64, tol: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub passed: bool,
}

impl Check {
    fn statistical(name: String, xs: &[f64], expected: f64) -> Self {
        let est = estimate(xs);
        let z = est.z_score(expected);
        Self {
            name,
            kind: CheckKind::Statistical {
                estimate: est,
                expected,
                z,
            },
            passed: z.abs() <= Z_LIMIT,
        }
    }

    fn deterministic(name: String, worst: f64, tol: f64) -> Self {
        Self {
            name,
            kind: CheckKind::Deterministic { worst, tol },
            passed: worst <= tol,
        }
    }
}

/// A list of checks; passes iff every check passes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn extend(&mut self, other: SuiteReport) {
        self.checks.extend(other.checks);
    }

    /// Largest `|z|` over the statistical checks.
    pub fn max_abs_z(&self) -> f64 {
        self.checks
            .iter()
            .filter_map(|c| match c.kind {
                CheckKind::Statistical { z, .. } => Some(z.abs()),
                _ => None,
            })
            .fold(0.0, f64::max)
    }
}

/// Worst relative deviation from `I_(i,i) = (Δw_i² − η_i h)/2` and
/// `I_(i,j) + I_(j,i) = Δw_i Δw_j` over one matrix.
pub fn identity_deviation(iim: &IteratedIntegralMatrix, dw: &[f64], eta: &[f64]) -> (f64, f64) {
    let k = iim.k();
    let h = iim.h;
    let e = &iim.entries;
    let mut diag: f64 = 0.0;
    let mut pair: f64 = 0.0;
    for i in 0..k {
        let want = (dw[i] * dw[i] - eta[i] * h) / 2.0;
        let scale = (dw[i] * dw[i] + eta[i] * h) / 2.0;
        diag = diag.max(rel(e[(i, i)] - want, scale));
        for j in i + 1..k {
            let prod = dw[i] * dw[j];
            let scale = prod.abs() + e[(i, j)].abs() + e[(j, i)].abs();
            pair = pair.max(rel(e[(i, j)] + e[(j, i)] - prod, scale));
        }
    }
    (diag, pair)
}

fn rel(diff: f64, scale: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if scale > 0.0 {
        diff.abs() / scale
    } else {
        f64::INFINITY
    }
}

/// Pathwise identities of `n` assembled matrices.
pub fn identity_suite(
    model: &CovarianceModel,
    h: f64,
    d: u64,
    n: usize,
    seed: u64,
    algorithm: Algorithm,
    workers: usize,
) -> Result<SuiteReport> {
    let devs = run_replicates(n, workers, |rep| {
        let (inc, iim) = sample_step(model, h, d, algorithm, seed, rep)?;
        Ok(identity_deviation(&iim, inc.dw(), model.eta()))
    })?;
    let diag = devs.iter().map(|d| d.0).fold(0.0, f64::max);
    let pair = devs.iter().map(|d| d.1).fold(0.0, f64::max);
    Ok(SuiteReport {
        checks: vec![
            Check::deterministic(format!("{algorithm} K={} diagonal identity", model.k()), diag, IDENTITY_TOL),
            Check::deterministic(format!("{algorithm} K={} pair identity", model.k()), pair, IDENTITY_TOL),
        ],
    })
}

/// `E[A_(a,b)²]` for the sampler's output.
fn area_second_moment(eta: &[f64], a: usize, b: usize, h: f64, d: u64, algorithm: Algorithm) -> f64 {
    let full = eta[a] * eta[b] * h * h / 4.0;
    match algorithm {
        Algorithm::Alg1 => full - 1.5 * h * h / (PI * PI) * eta[a] * eta[b] * tail_constant(d),
        Algorithm::Alg2 => full,
    }
}

/// `E[I_(a,b) I_(c,e)]` (0-based) for the sampler's output.
///
/// Flipping the sign of mode `m` (its increment and series coefficients)
/// leaves the law invariant and multiplies the product by `(−1)^{#m}`, so
/// only index patterns with even multiplicities survive.
fn product_moment(eta: &[f64], x: (usize, usize), y: (usize, usize), h: f64, d: u64, algorithm: Algorithm) -> f64 {
    let idx = [x.0, x.1, y.0, y.1];
    if idx.iter().any(|m| idx.iter().filter(|n| *n == m).count() % 2 == 1) {
        return 0.0;
    }
    let (a, b) = x;
    if a == b {
        return if y == x { eta[a] * eta[a] * h * h / 2.0 } else { 0.0 };
    }
    let sym = eta[a] * eta[b] * h * h / 4.0;
    let area = area_second_moment(eta, a, b, h, d, algorithm);
    if y == x {
        sym + area
    } else {
        sym - area
    }
}

/// Zero means, second moments and cross moments of every entry of the
/// assembled matrix, plus the pathwise identities. Samples come from
/// `sample_model`; expectations are computed from `reference`, so passing a
/// deliberately wrong `sample_model` acts as a negative control.
#[allow(clippy::too_many_arguments)]
pub fn moment_suite_against(
    sample_model: &CovarianceModel,
    reference: &CovarianceModel,
    h: f64,
    d: u64,
    n: usize,
    seed: u64,
    algorithm: Algorithm,
    workers: usize,
) -> Result<SuiteReport> {
    let k = reference.k();
    if sample_model.k() != k {
        return Err(invalid("sample and reference models differ in K"));
    }
    let entries: Vec<(usize, usize)> = (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).collect();
    let samples = run_replicates(n, workers, |rep| {
        let (inc, iim) = sample_step(sample_model, h, d, algorithm, seed, rep)?;
        let dev = identity_deviation(&iim, inc.dw(), sample_model.eta());
        Ok((iim.entries.iter().copied().collect::<Vec<f64>>(), dev))
    })?;
    // nalgebra stores column-major: entry (a, b) sits at a + b k
    let value = |s: &Vec<f64>, (a, b): (usize, usize)| s[a + b * k];
    let eta = reference.eta();
    let mut checks = Vec::new();
    for &x in &entries {
        let xs: Vec<f64> = samples.iter().map(|(s, _)| value(s, x)).collect();
        checks.push(Check::statistical(
            format!("{algorithm} mean I({},{})", x.0 + 1, x.1 + 1),
            &xs,
            0.0,
        ));
    }
    for (p, &x) in entries.iter().enumerate() {
        for &y in &entries[p..] {
            let xs: Vec<f64> = samples.iter().map(|(s, _)| value(s, x) * value(s, y)).collect();
            let kind = if x == y { "second moment" } else { "cross moment" };
            checks.push(Check::statistical(
                format!("{algorithm} {kind} I({},{}) I({},{})", x.0 + 1, x.1 + 1, y.0 + 1, y.1 + 1),
                &xs,
                product_moment(eta, x, y, h, d, algorithm),
            ));
        }
    }
    let diag = samples.iter().map(|(_, d)| d.0).fold(0.0, f64::max);
    let pair = samples.iter().map(|(_, d)| d.1).fold(0.0, f64::max);
    checks.push(Check::deterministic(format!("{algorithm} diagonal identity"), diag, IDENTITY_TOL));
    checks.push(Check::deterministic(format!("{algorithm} pair identity"), pair, IDENTITY_TOL));
    Ok(SuiteReport { checks })
}

/// [`moment_suite_against`] with the sampling model as its own reference.
pub fn moment_suite(
    model: &CovarianceModel,
    h: f64,
    d: u64,
    n: usize,
    seed: u64,
    algorithm: Algorithm,
    workers: usize,
) -> Result<SuiteReport> {
    moment_suite_against(model, model, h, d, n, seed, algorithm, workers)
}

/// For `n` random increments: `‖S Sᵀ − Σ^Q_∞‖_F ≤ 1e−10 ‖Σ^Q_∞‖_F` with the
/// closed-form factor `S`, and `λ_min(Σ^Q_∞) ≥ 2 η_{K−1} η_K`.
pub fn cholesky_suite(
    model: &CovarianceModel,
    h: f64,
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<SuiteReport> {
    let k = model.k();
    if k < 2 {
        return Err(invalid("the Cholesky check needs K >= 2"));
    }
    let floor = 2.0 * model.eta()[k - 2] * model.eta()[k - 1];
    let res = run_replicates(n, workers, |rep| {
        let inc = replicate_increment(model, h, seed, rep)?;
        let sigma = sigma_infinity(model, &inc)?;
        let s = sqrt_sigma_infinity(model, &inc)?;
        let residual = (&s * s.transpose() - sigma.as_matrix()).norm() / sigma.frobenius_norm();
        let lambda_min = sigma.eigenvalues()[0];
        Ok((residual, ((floor - lambda_min) / floor).max(0.0)))
    })?;
    let residual = res.iter().map(|r| r.0).fold(0.0, f64::max);
    let shortfall = res.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(SuiteReport {
        checks: vec![
            Check::deterministic(format!("K={k} closed-form factor residual"), residual, CHOLESKY_TOL),
            Check::deterministic(format!("K={k} smallest eigenvalue floor"), shortfall, CHOLESKY_TOL),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{make_model, SpectrumSpec};

    #[test]
    fn product_moment_patterns() {
        let eta = [1.0, 0.5, 0.25];
        let h = 0.1;
        let m = |x, y| product_moment(&eta, x, y, h, 8, Algorithm::Alg2);
        assert_eq!(m((0, 1), (0, 2)), 0.0);
        assert_eq!(m((0, 0), (1, 1)), 0.0);
        assert_eq!(m((0, 0), (0, 1)), 0.0);
        assert!((m((1, 1), (1, 1)) - 0.25 * 0.01 / 2.0).abs() < 1e-18);
        assert!((m((0, 1), (0, 1)) - 0.5 * 0.01 / 2.0).abs() < 1e-18);
        assert_eq!(m((0, 1), (1, 0)), 0.0);
        let alg1 = product_moment(&eta, (0, 1), (1, 0), h, 8, Algorithm::Alg1);
        assert!(alg1 > 0.0);
    }

    #[test]
    fn small_suites_pass() {
        let model = make_model(&SpectrumSpec::PowerLaw { c: 1.0, rho: 2.0 }, 3).unwrap();
        for alg in [Algorithm::Alg1, Algorithm::Alg2] {
            let r = moment_suite(&model, 0.1, 8, 4000, 1, alg, 1).unwrap();
            assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        }
        assert!(cholesky_suite(&model, 0.1, 50, 2, 1).unwrap().passed());
        assert!(cholesky_suite(&CovarianceModel::unit(1).unwrap(), 0.1, 5, 2, 1).is_err());
    }

    #[test]
    fn corrupted_model_fails() {
        let model = CovarianceModel::unit(2).unwrap();
        let wrong = model.scaled(2.0).unwrap();
        let r = moment_suite_against(&wrong, &model, 0.1, 8, 4000, 1, Algorithm::Alg1, 1).unwrap();
        assert!(!r.passed());
        assert!(r.max_abs_z() > Z_LIMIT);
    }
}
