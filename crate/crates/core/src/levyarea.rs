//! Lévy-area samplers.
//!
//! For `i < j` the area is the series
//!
//! ```text
//! A_(i,j) = h/(2π) √(η_i η_j) Σ_{r ≥ 1} (1/r) [ U_ri (Z_rj − √2 V_j) − U_rj (Z_ri − √2 V_i) ]
//! ```
//!
//! with `U_r`, `Z_r`, `V` independent standard normal vectors and
//! `Δw = √h Q_K^{1/2} V`. [`sample_area_alg1`] truncates the series after `D`
//! terms. [`sample_area_alg2`] adds a Gaussian approximation of the discarded
//! tail, `h/(2π) √c_D · √Σ^Q_∞ · Υ`, where `c_D = Σ_{r>D} r⁻²` and the square
//! root of the limiting conditional covariance `Σ^Q_∞` is available in closed
//! form (see [`sqrt_sigma_infinity`]).

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::covariance::{CovarianceModel, WienerIncrement};
use crate::error::{invalid, Error, Result};
use crate::kronkit::{pair_index_map, qtilde_diagonal, SelectionMap, SymmetricMatrix};
use crate::streams::SeriesSource;
use crate::MAX_DENSE_K;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Truncated series.
    Alg1,
    /// Truncated series plus Gaussian tail.
    Alg2,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "alg1" => Ok(Algorithm::Alg1),
            "2" | "alg2" => Ok(Algorithm::Alg2),
            _ => Err(invalid(format!("unknown algorithm {s:?}, expected 1 or 2"))),
        }
    }
}

/// The strictly upper-triangular Lévy areas of one step, in pair-map order.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyAreaSample {
    pub map: SelectionMap,
    pub algorithm: Algorithm,
    pub d: u64,
    pub h: f64,
    pub values: Vec<f64>,
}

/// `Σ_{r > D} r⁻²`.
///
/// Sums the terms up to `R = max(D, 64)` from the smallest upwards and adds
/// the Euler–Maclaurin expansion of the remainder beyond `R`; the first
/// omitted correction is below `1/(30 R⁹) < 1e-17`.
pub fn tail_constant(d: u64) -> f64 {
    let r_cut = d.max(64);
    let mut partial = 0.0;
    for r in (d + 1..=r_cut).rev() {
        let r = r as f64;
        partial += 1.0 / (r * r);
    }
    let x = r_cut as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 1/R - 1/(2R²) + 1/(6R³) - 1/(30R⁵) + 1/(42R⁷)
    let remainder = inv * (1.0 - 0.5 * inv + inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 / 42.0)));
    partial + remainder
}

fn check_consistent(model: &CovarianceModel, inc: &WienerIncrement) -> Result<()> {
    if model.k() != inc.k() {
        return Err(invalid(format!(
            "increment has K = {} but model has K = {}",
            inc.k(),
            model.k()
        )));
    }
    let h = inc.h();
    for ((dw, v), eta) in inc.dw().iter().zip(inc.v()).zip(model.eta()) {
        if *dw != (h * eta).sqrt() * v {
            return Err(invalid("increment was not built from this model"));
        }
    }
    Ok(())
}

fn check_capacity(k: usize) -> Result<()> {
    if k > MAX_DENSE_K {
        return Err(Error::Capacity { k, max: MAX_DENSE_K });
    }
    Ok(())
}

/// Adds the unit-spectrum series terms `r ∈ [r_lo, r_hi]` to `acc`:
/// `acc_p += Σ_r (1/r) [u_i (z_j − √2 v_j) − u_j (z_i − √2 v_i)]`.
///
/// Accumulates the dense `K × K` sum `M = Σ_r (1/r) u_r y_rᵀ` and adds
/// `M_ij − M_ji` at the end, which keeps the inner loop branch-free.
pub(crate) fn add_unit_series(
    map: &SelectionMap,
    v: &[f64],
    r_lo: u64,
    r_hi: u64,
    source: &mut dyn SeriesSource,
    acc: &mut [f64],
) {
    let k = map.k();
    let mut m = vec![0.0; k * k];
    let shift: Vec<f64> = v.iter().map(|x| SQRT_2 * x).collect();
    source.visit_series(k, r_lo, r_hi, &mut |r0, us, zs| match k {
        2 => outer_block::<2>(r0, us, zs, &shift, &mut m),
        3 => outer_block::<3>(r0, us, zs, &shift, &mut m),
        4 => outer_block::<4>(r0, us, zs, &shift, &mut m),
        5 => outer_block::<5>(r0, us, zs, &shift, &mut m),
        6 => outer_block::<6>(r0, us, zs, &shift, &mut m),
        7 => outer_block::<7>(r0, us, zs, &shift, &mut m),
        8 => outer_block::<8>(r0, us, zs, &shift, &mut m),
        _ => outer_block_dyn(k, r0, us, zs, &shift, &mut m),
    });
    let mut p = 0;
    for i in 0..k {
        for j in i + 1..k {
            acc[p] += m[i * k + j] - m[j * k + i];
            p += 1;
        }
    }
}

/// `m += Σ_t (1/r_t) u_t (z_t − shift)ᵀ` over consecutive indices starting at
/// `r0`, with the dimension known at compile time.
fn outer_block<const K: usize>(r0: u64, us: &[f64], zs: &[f64], shift: &[f64], m: &mut [f64]) {
    let shift: [f64; K] = shift.try_into().expect("shift has length K");
    let mut local = [[0.0; K]; K];
    for (t, (u, z)) in us.chunks_exact(K).zip(zs.chunks_exact(K)).enumerate() {
        let w = 1.0 / (r0 + t as u64) as f64;
        let u: [f64; K] = u.try_into().expect("chunk has length K");
        let mut y = [0.0; K];
        for j in 0..K {
            y[j] = (z[j] - shift[j]) * w;
        }
        for i in 0..K {
            for j in 0..K {
                local[i][j] += u[i] * y[j];
            }
        }
    }
    for (row, lrow) in m.chunks_exact_mut(K).zip(&local) {
        for (x, l) in row.iter_mut().zip(lrow) {
            *x += l;
        }
    }
}

fn outer_block_dyn(k: usize, r0: u64, us: &[f64], zs: &[f64], shift: &[f64], m: &mut [f64]) {
    let mut y = vec![0.0; k];
    for (t, (u, z)) in us.chunks_exact(k).zip(zs.chunks_exact(k)).enumerate() {
        let w = 1.0 / (r0 + t as u64) as f64;
        for ((yj, zj), s) in y.iter_mut().zip(z).zip(shift) {
            *yj = (zj - s) * w;
        }
        for (row, ui) in m.chunks_exact_mut(k).zip(u) {
            for (mij, yj) in row.iter_mut().zip(&y) {
                *mij += ui * yj;
            }
        }
    }
}

/// Truncated-series sampler (`D` terms). `D = 0` gives zero areas.
pub fn sample_area_alg1(
    model: &CovarianceModel,
    inc: &WienerIncrement,
    d: u64,
    source: &mut dyn SeriesSource,
) -> Result<LevyAreaSample> {
    check_consistent(model, inc)?;
    let map = pair_index_map(model.k())?;
    let mut acc = vec![0.0; map.len()];
    add_unit_series(&map, inc.v(), 1, d, source, &mut acc);
    let scale = inc.h() / (2.0 * PI);
    let values = acc
        .iter()
        .zip(qtilde_diagonal(model, &map))
        .map(|(a, q)| scale * q * a)
        .collect();
    Ok(LevyAreaSample {
        map,
        algorithm: Algorithm::Alg1,
        d,
        h: inc.h(),
        values,
    })
}

/// The `L × L` matrix with entries
/// `η_i δ_im M_jn − η_i δ_in M_jm − η_j δ_jm M_in + η_j δ_jn M_im`
/// for pairs `(i,j)`, `(m,n)`. This is the conditional covariance
/// `E[(U_i y_j − U_j y_i)(U_m y_n − U_n y_m)]` for `U ~ N(0, Q_K)`
/// once `M` stands for (a weighted sum or expectation of) `y yᵀ`.
pub(crate) fn pair_covariance(map: &SelectionMap, eta: &[f64], m: &DMatrix<f64>) -> SymmetricMatrix {
    let pairs = map.pairs();
    SymmetricMatrix::from_upper_fn(map.len(), |a, b| {
        let (i, j) = (pairs[a].0 - 1, pairs[a].1 - 1);
        let (p, q) = (pairs[b].0 - 1, pairs[b].1 - 1);
        let mut x = 0.0;
        if i == p {
            x += eta[i] * m[(j, q)];
        }
        if i == q {
            x -= eta[i] * m[(j, p)];
        }
        if j == p {
            x -= eta[j] * m[(i, q)];
        }
        if j == q {
            x += eta[j] * m[(i, p)];
        }
        x
    })
}

/// `E[y yᵀ]` for `y = Z − √(2/h) Δw` given `Δw`, with `Z ~ N(0, diag(eta))`
/// and `Δw = √h diag(eta)^{1/2} v`.
fn limit_moment(eta: &[f64], v: &[f64]) -> DMatrix<f64> {
    let k = eta.len();
    DMatrix::from_fn(k, k, |a, b| {
        let base = if a == b { eta[a] } else { 0.0 };
        base + 2.0 * (eta[a] * eta[b]).sqrt() * v[a] * v[b]
    })
}

/// `Σ^Q_∞`, the limiting conditional covariance of the normalised tail sums
/// given the increment.
pub fn sigma_infinity(model: &CovarianceModel, inc: &WienerIncrement) -> Result<SymmetricMatrix> {
    check_consistent(model, inc)?;
    check_capacity(model.k())?;
    let map = pair_index_map(model.k())?;
    Ok(pair_covariance(&map, model.eta(), &limit_moment(model.eta(), inc.v())))
}

/// `Σ^I_∞` for the unit spectrum, driven by the normals `v`.
pub fn unit_sigma_infinity(map: &SelectionMap, v: &[f64]) -> SymmetricMatrix {
    let ones = vec![1.0; map.k()];
    pair_covariance(map, &ones, &limit_moment(&ones, v))
}

/// Closed-form symmetric square root of `Σ^I_∞`:
/// `(Σ^I_∞ + 2a I) / (√2 (1 + a))` with `a = √(1 + vᵀv)`.
pub fn unit_sqrt_sigma_infinity(map: &SelectionMap, v: &[f64]) -> SymmetricMatrix {
    let a = (1.0 + v.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let sigma = unit_sigma_infinity(map, v);
    let denom = SQRT_2 * (1.0 + a);
    SymmetricMatrix::from_upper_fn(map.len(), |i, j| {
        let diag = if i == j { 2.0 * a } else { 0.0 };
        (sigma.get(i, j) + diag) / denom
    })
}

/// Factor `S = Q̃_K (Σ^I_∞ + 2a I) / (√2 (1 + a))` with `S Sᵀ = Σ^Q_∞`.
///
/// `Q̃_K` is diagonal, so this is a row scaling of the unit-spectrum root.
pub fn sqrt_sigma_infinity(model: &CovarianceModel, inc: &WienerIncrement) -> Result<DMatrix<f64>> {
    check_consistent(model, inc)?;
    check_capacity(model.k())?;
    let map = pair_index_map(model.k())?;
    let q = qtilde_diagonal(model, &map);
    let mut s = unit_sqrt_sigma_infinity(&map, inc.v()).into_matrix();
    for (mut row, qi) in s.row_iter_mut().zip(&q) {
        row *= *qi;
    }
    Ok(s)
}

/// The pieces of the Gaussian tail term of the second algorithm.
#[derive(Debug, Clone)]
pub struct TailSpec {
    pub d: u64,
    pub c_d: f64,
    /// Diagonal of `Q̃_K`.
    pub qtilde: Vec<f64>,
    /// `a = √(1 + VᵀV)`.
    pub a: f64,
    /// Symmetric root of `Σ^I_∞`.
    pub unit_root: SymmetricMatrix,
}

impl TailSpec {
    pub fn new(model: &CovarianceModel, inc: &WienerIncrement, d: u64) -> Result<Self> {
        check_consistent(model, inc)?;
        check_capacity(model.k())?;
        let map = pair_index_map(model.k())?;
        Ok(Self {
            d,
            c_d: tail_constant(d),
            qtilde: qtilde_diagonal(model, &map),
            a: (1.0 + inc.v_norm_sq()).sqrt(),
            unit_root: unit_sqrt_sigma_infinity(&map, inc.v()),
        })
    }

    /// `√Σ^Q_∞ Υ` without the `h/(2π) √c_D` prefactor.
    pub fn apply_root(&self, upsilon: &[f64]) -> Vec<f64> {
        let root = self.unit_root.as_matrix();
        (0..self.qtilde.len())
            .map(|i| {
                let row: f64 = (0..upsilon.len()).map(|j| root[(i, j)] * upsilon[j]).sum();
                self.qtilde[i] * row
            })
            .collect()
    }
}

/// Truncated series plus Gaussian tail. `D = 0` is a pure tail approximation.
pub fn sample_area_alg2(
    model: &CovarianceModel,
    inc: &WienerIncrement,
    d: u64,
    source: &mut dyn SeriesSource,
) -> Result<LevyAreaSample> {
    check_capacity(model.k())?;
    let mut sample = sample_area_alg1(model, inc, d, source)?;
    let tail = TailSpec::new(model, inc, d)?;
    let mut upsilon = vec![0.0; sample.map.len()];
    source.tail(&mut upsilon);
    let scale = inc.h() / (2.0 * PI) * tail.c_d.sqrt();
    for (x, t) in sample.values.iter_mut().zip(tail.apply_root(&upsilon)) {
        *x += scale * t;
    }
    sample.algorithm = Algorithm::Alg2;
    Ok(sample)
}

/// Which truncation rule [`choose_d`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DRule {
    /// `D ≥ h^{1−2γ}`.
    Alg1,
    /// `D ≥ h^{1/2−γ} √(K²(K−1))`.
    Alg2K,
    /// `D ≥ h^{1/2−γ} (min_j η_j)^{−1/2}`.
    Alg2Eta,
}

/// Smallest truncation index that keeps a scheme of mean-square order
/// `gamma` in `h` undistorted.
pub fn choose_d(rule: DRule, h: f64, gamma: f64, model: &CovarianceModel) -> Result<u64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("step size h = {h} must be positive")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("order gamma = {gamma} must be positive")));
    }
    let k = model.k() as f64;
    let bound = match rule {
        DRule::Alg1 => h.powf(1.0 - 2.0 * gamma),
        DRule::Alg2K => h.powf(0.5 - gamma) * (k * k * (k - 1.0)).sqrt(),
        DRule::Alg2Eta => h.powf(0.5 - gamma) / model.min_eta().sqrt(),
    };
    // Absorb the rounding of powf so that e.g. 0.01^-1 yields exactly 100.
    let nearest = bound.round();
    let d = if (bound - nearest).abs() <= 1e-9 * bound.max(1.0) {
        nearest
    } else {
        bound.ceil()
    };
    if !d.is_finite() || d > u64::MAX as f64 {
        return Err(invalid(format!("truncation bound {bound} is out of range")));
    }
    Ok((d as u64).max(1))
}
