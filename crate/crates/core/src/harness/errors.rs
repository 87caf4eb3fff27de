//! Coupled Monte-Carlo estimators of the mean-square errors of both samplers.
//!
//! Every replicate draws its increment and series coefficients from the
//! counter-based streams, so the series truncated at `D` and at the reference
//! index `D_ref` share their first `D` terms and the error is measured
//! pathwise. A whole grid of `D` values shares one `D_ref`, chosen for the
//! largest grid point, and is evaluated in a single pass over `r`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;

use crate::covariance::{make_model, CovarianceModel, SpectrumSpec, WienerIncrement};
use crate::error::{invalid, Result};
use crate::harness::stats::{estimate, run_replicates, McEstimate};
use crate::harness::replicate_increment;
use crate::kronkit::{pair_index_map, qtilde_diagonal, sym_sqrt, SelectionMap, SymmetricMatrix};
use crate::levyarea::{add_unit_series, pair_covariance, tail_constant, unit_sqrt_sigma_infinity};
use crate::streams::{ReplicateStreams, SeriesSource};
use crate::MAX_DENSE_K;

/// Smallest number of replicates the estimators accept.
pub const MIN_REPLICATES: usize = 1000;

const SQRT_TOL: f64 = 1e-12;

/// Reference truncation index for a grid whose largest point is `d_max`.
pub fn reference_d(d_max: u64) -> u64 {
    d_max.saturating_mul(128).max(1 << 14)
}

/// Exact mean-square truncation error of the first algorithm for pair
/// `(i, j)` (1-based): `(3/2) (h²/π²) η_i η_j c_D`.
pub fn alg1_mse_analytic(model: &CovarianceModel, i: usize, j: usize, h: f64, d: u64) -> Result<f64> {
    if i == 0 || i >= j || j > model.k() {
        return Err(invalid(format!(
            "pair ({i}, {j}) must satisfy 1 <= i < j <= K = {}",
            model.k()
        )));
    }
    let eta = model.eta();
    Ok(1.5 * h * h / (PI * PI) * eta[i - 1] * eta[j - 1] * tail_constant(d))
}

fn check_grid(d_grid: &[u64], n: usize) -> Result<()> {
    if n < MIN_REPLICATES {
        return Err(invalid(format!(
            "N = {n} replicates is below the minimum of {MIN_REPLICATES}"
        )));
    }
    if d_grid.is_empty() {
        return Err(invalid("D-grid is empty"));
    }
    if d_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("D-grid must be strictly increasing"));
    }
    Ok(())
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("step size h = {h} must be positive")));
    }
    Ok(())
}

/// Pathwise truncation error `A(D_ref) − A(D)` of the first algorithm, i.e.
/// the series terms `D < r ≤ D_ref` in area units.
pub fn alg1_tail(
    model: &CovarianceModel,
    inc: &WienerIncrement,
    d: u64,
    d_ref: u64,
    source: &mut dyn SeriesSource,
) -> Result<Vec<f64>> {
    if d_ref < d {
        return Err(invalid(format!("reference index {d_ref} is below D = {d}")));
    }
    let map = pair_index_map(model.k())?;
    let mut acc = vec![0.0; map.len()];
    add_unit_series(&map, inc.v(), d + 1, d_ref, source, &mut acc);
    Ok(scale_areas(&map, model, inc.h(), acc))
}

fn scale_areas(map: &SelectionMap, model: &CovarianceModel, h: f64, unit: Vec<f64>) -> Vec<f64> {
    let scale = h / (2.0 * PI);
    unit.iter()
        .zip(qtilde_diagonal(model, map))
        .map(|(a, q)| scale * q * a)
        .collect()
}

/// Per-pair error estimate of the first algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMse {
    /// 1-based pair `(i, j)`.
    pub pair: (usize, usize),
    pub estimate: McEstimate,
    pub analytic: f64,
}

/// Error of the first algorithm at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Alg1Row {
    pub d: u64,
    pub pairs: Vec<PairMse>,
    /// `E Σ_{i<j} |A_(i,j) − A^D_(i,j)|²`.
    pub total: McEstimate,
    pub total_analytic: f64,
    /// `3 (tr Q_K)² h² / (2 D π²)`.
    pub summed_bound: f64,
}

/// Result of [`alg1_mse_mc`].
#[derive(Debug, Clone, PartialEq)]
pub struct Alg1Study {
    pub d_ref: u64,
    pub rows: Vec<Alg1Row>,
}

/// Monte-Carlo truncation error of the first algorithm over a `D`-grid.
pub fn alg1_mse_mc(
    model: &CovarianceModel,
    h: f64,
    d_grid: &[u64],
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<Alg1Study> {
    check_step(h)?;
    check_grid(d_grid, n)?;
    let map = pair_index_map(model.k())?;
    let l = map.len();
    let g = d_grid.len();
    let d_ref = reference_d(d_grid[g - 1]);
    let qtilde = qtilde_diagonal(model, &map);
    let scale = h / (2.0 * PI);

    let per_rep = run_replicates(n, workers, |rep| {
        let inc = replicate_increment(model, h, seed, rep)?;
        let mut src = ReplicateStreams::new(seed, rep);
        // segment t covers (d_grid[t], d_grid[t + 1]] with d_grid[g] = d_ref
        let mut tail = vec![0.0; l];
        let mut out = vec![0.0; g * l];
        for t in (0..g).rev() {
            let hi = if t + 1 < g { d_grid[t + 1] } else { d_ref };
            add_unit_series(&map, inc.v(), d_grid[t] + 1, hi, &mut src, &mut tail);
            for p in 0..l {
                let e = scale * qtilde[p] * tail[p];
                out[t * l + p] = e * e;
            }
        }
        Ok(out)
    })?;

    let tr = model.trace_k();
    let mut rows = Vec::with_capacity(g);
    for (t, &d) in d_grid.iter().enumerate() {
        let mut pairs = Vec::with_capacity(l);
        for (p, &(i, j)) in map.pairs().iter().enumerate() {
            let xs: Vec<f64> = per_rep.iter().map(|r| r[t * l + p]).collect();
            pairs.push(PairMse {
                pair: (i, j),
                estimate: estimate(&xs),
                analytic: alg1_mse_analytic(model, i, j, h, d)?,
            });
        }
        let totals: Vec<f64> = per_rep.iter().map(|r| r[t * l..(t + 1) * l].iter().sum()).collect();
        rows.push(Alg1Row {
            d,
            total: estimate(&totals),
            total_analytic: pairs.iter().map(|p| p.analytic).sum(),
            summed_bound: 1.5 * tr * tr * h * h / (d.max(1) as f64 * PI * PI),
            pairs,
        });
    }
    Ok(Alg1Study { d_ref, rows })
}

/// Error of the second algorithm at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Alg2Row {
    pub d: u64,
    pub estimate: McEstimate,
    /// `(5/(12π²)) h² K² (K−1) max_i η_i² / D²`.
    pub bound: f64,
    /// Whether the estimate stays below `1.05 · bound`.
    pub within_bound: bool,
}

/// Result of [`alg2_mse_mc`].
#[derive(Debug, Clone, PartialEq)]
pub struct Alg2Study {
    pub d_ref: u64,
    pub rows: Vec<Alg2Row>,
}

/// Monte-Carlo error of the Gaussian tail approximation of the second
/// algorithm over a `D`-grid, measured through the Frobenius functional
///
/// ```text
/// (h/2π)² c_D E‖Q̃_K (√Σ^{I,(D)} − √Σ^I_∞)‖²_F,
/// Σ^{I,(D)} = c_D⁻¹ Σ_{r>D} r⁻² C(y_r y_rᵀ),   y_r = Z_r − √2 V,
/// ```
///
/// where `C` maps a `K × K` moment matrix to the `L × L` covariance of the
/// pair products. The sum runs up to `D_ref`; the remainder beyond `D_ref` is
/// replaced by its conditional mean `c_{D_ref} C(I + 2VVᵀ)`.
pub fn alg2_mse_mc(
    model: &CovarianceModel,
    h: f64,
    d_grid: &[u64],
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<Alg2Study> {
    check_step(h)?;
    check_grid(d_grid, n)?;
    let k = model.k();
    if k > MAX_DENSE_K {
        return Err(crate::Error::Capacity { k, max: MAX_DENSE_K });
    }
    let map = pair_index_map(k)?;
    let g = d_grid.len();
    let d_ref = reference_d(d_grid[g - 1]);
    let c_ref = tail_constant(d_ref);
    let c_d: Vec<f64> = d_grid.iter().map(|&d| tail_constant(d)).collect();
    let q2: Vec<f64> = qtilde_diagonal(model, &map).iter().map(|q| q * q).collect();
    let ones = vec![1.0; k];
    let pref = (h / (2.0 * PI)).powi(2);

    let per_rep = run_replicates(n, workers, |rep| {
        let inc = replicate_increment(model, h, seed, rep)?;
        let v = inc.v();
        let mut src = ReplicateStreams::new(seed, rep);
        let exact = unit_sqrt_sigma_infinity(&map, v);
        // weighted second moments accumulated from d_ref downwards
        let mut moment = DMatrix::from_fn(k, k, |a, b| {
            c_ref * (if a == b { 1.0 } else { 0.0 } + 2.0 * v[a] * v[b])
        });
        let mut z = vec![0.0; k];
        let mut out = vec![0.0; g];
        for t in (0..g).rev() {
            let hi = if t + 1 < g { d_grid[t + 1] } else { d_ref };
            for r in (d_grid[t] + 1..=hi).rev() {
                src.series_z(r, &mut z);
                for (zj, vj) in z.iter_mut().zip(v) {
                    *zj -= SQRT_2 * vj;
                }
                let w = 1.0 / (r as f64 * r as f64);
                for a in 0..k {
                    let wa = w * z[a];
                    for b in a..k {
                        moment[(a, b)] += wa * z[b];
                    }
                }
            }
            let m = DMatrix::from_fn(k, k, |a, b| {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                moment[(lo, hi)] / c_d[t]
            });
            let sigma = pair_covariance(&map, &ones, &m);
            let root = sym_sqrt(&sigma, SQRT_TOL)?;
            out[t] = pref * c_d[t] * weighted_distance_sq(&root, &exact, &q2);
        }
        Ok(out)
    })?;

    let kf = k as f64;
    let eta_max = model.max_eta();
    let rows = d_grid
        .iter()
        .enumerate()
        .map(|(t, &d)| {
            let xs: Vec<f64> = per_rep.iter().map(|r| r[t]).collect();
            let est = estimate(&xs);
            let df = d.max(1) as f64;
            let bound = 5.0 / (12.0 * PI * PI) * h * h * kf * kf * (kf - 1.0) * eta_max * eta_max
                / (df * df);
            Alg2Row {
                d,
                estimate: est,
                bound,
                within_bound: est.mean <= 1.05 * bound,
            }
        })
        .collect();
    Ok(Alg2Study { d_ref, rows })
}

/// `‖Q̃ (a − b)‖²_F` with `Q̃` given through its squared diagonal.
fn weighted_distance_sq(a: &SymmetricMatrix, b: &SymmetricMatrix, q2: &[f64]) -> f64 {
    let (a, b) = (a.as_matrix(), b.as_matrix());
    let mut s = 0.0;
    for (p, w) in q2.iter().enumerate() {
        for c in 0..a.ncols() {
            let d = a[(p, c)] - b[(p, c)];
            s += w * d * d;
        }
    }
    s
}

/// One row of [`EtaBoundReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct EtaBoundRow {
    pub k: usize,
    pub min_eta: f64,
    pub estimate: McEstimate,
    /// `mse · D² · min_j η_j / h²`.
    pub ratio: f64,
}

/// Result of [`eta_bound_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct EtaBoundReport {
    pub d: u64,
    pub h: f64,
    pub rows: Vec<EtaBoundRow>,
    /// `max ratio / min ratio`.
    pub spread: f64,
    /// `spread ≤ 3`; `None` for a single row.
    pub stable: Option<bool>,
    pub nondecreasing: bool,
}

/// Second-algorithm error across several `K` at fixed `D`, normalised by the
/// spectrum-dependent rate `h² / (D² min_j η_j)`.
pub fn eta_bound_check(
    spec: &SpectrumSpec,
    h: f64,
    d: u64,
    k_grid: &[usize],
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<EtaBoundReport> {
    if k_grid.is_empty() {
        return Err(invalid("K-grid is empty"));
    }
    if let Some(&k) = k_grid.iter().find(|&&k| k > MAX_DENSE_K) {
        return Err(crate::Error::Capacity { k, max: MAX_DENSE_K });
    }
    let mut rows = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let model = make_model(spec, k)?;
        let study = alg2_mse_mc(&model, h, &[d], n, seed, workers)?;
        let est = study.rows[0].estimate;
        let df = d as f64;
        rows.push(EtaBoundRow {
            k,
            min_eta: model.min_eta(),
            estimate: est,
            ratio: est.mean * df * df * model.min_eta() / (h * h),
        });
    }
    let max = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let spread = max / min;
    Ok(EtaBoundReport {
        d,
        h,
        stable: (rows.len() > 1).then_some(spread <= 3.0),
        nondecreasing: rows.windows(2).all(|w| w[1].ratio >= w[0].ratio),
        spread,
        rows,
    })
}
