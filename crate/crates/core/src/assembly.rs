//! Assembly of the iterated-integral matrix and its contraction against
//! finite-dimensional stand-ins for the operators `Φ` and `Ψ`.

use nalgebra::DMatrix;

use crate::covariance::{CovarianceModel, WienerIncrement};
use crate::error::{invalid, Result};
use crate::harness::stats::{estimate, run_replicates, McEstimate};
use crate::kronkit::embed_antisymmetric;
use crate::levyarea::LevyAreaSample;
use crate::streams::{Purpose, ReplicateStreams};

/// The full `K × K` matrix of `I^Q_{(i,j)}(h)` for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct IteratedIntegralMatrix {
    pub h: f64,
    pub entries: DMatrix<f64>,
}

impl IteratedIntegralMatrix {
    pub fn k(&self) -> usize {
        self.entries.nrows()
    }

    /// Entry `(i, j)`, 1-based.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i - 1, j - 1)]
    }
}

/// `I_(i,j) = Δw_i Δw_j / 2 − δ_ij η_i h / 2 + A_(i,j)`.
///
/// Diagonal entries are evaluated as `(Δw_i² − η_i h) / 2` and the two
/// off-diagonal halves share the same `Δw_i Δw_j / 2`, so both pathwise
/// identities hold to rounding.
pub fn assemble(
    inc: &WienerIncrement,
    area: &LevyAreaSample,
    model: &CovarianceModel,
) -> Result<IteratedIntegralMatrix> {
    let k = model.k();
    if inc.k() != k || area.map.k() != k {
        return Err(invalid(format!(
            "inconsistent K: model {k}, increment {}, area {}",
            inc.k(),
            area.map.k()
        )));
    }
    if inc.h() != area.h {
        return Err(invalid(format!(
            "inconsistent step: increment h = {}, area h = {}",
            inc.h(),
            area.h
        )));
    }
    let a = embed_antisymmetric(&area.map, &area.values)?;
    let dw = inc.dw();
    let h = inc.h();
    let entries = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            (dw[i] * dw[i] - model.eta()[i] * h) / 2.0
        } else {
            dw[i] * dw[j] / 2.0 + a[(i, j)]
        }
    });
    Ok(IteratedIntegralMatrix { h, entries })
}

/// Finite-dimensional surrogates of `Φ` and `Ψ` on a `d`-dimensional space.
///
/// Column `j` of `phi` holds the coordinates of `Φ ẽ_j`; `psi[j]` is the
/// `d × d` matrix of `x ↦ Ψ(x, ẽ_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOperatorPair {
    pub phi: DMatrix<f64>,
    pub psi: Vec<DMatrix<f64>>,
}

impl TestOperatorPair {
    pub fn new(phi: DMatrix<f64>, psi: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = phi.nrows();
        if psi.len() != phi.ncols() {
            return Err(invalid(format!(
                "phi has {} columns but psi has {} slices",
                phi.ncols(),
                psi.len()
            )));
        }
        if psi.iter().any(|p| p.nrows() != d || p.ncols() != d) {
            return Err(invalid(format!("every psi slice must be {d}x{d}")));
        }
        if phi.iter().chain(psi.iter().flat_map(|p| p.iter())).any(|x| !x.is_finite()) {
            return Err(invalid("operator entries must be finite"));
        }
        Ok(Self { phi, psi })
    }

    pub fn dim(&self) -> usize {
        self.phi.nrows()
    }

    pub fn k(&self) -> usize {
        self.phi.ncols()
    }
}

/// `Σ_{i,j} I_(i,j) Ψ(Φ ẽ_i, ẽ_j)`.
pub fn contract(iim: &IteratedIntegralMatrix, ops: &TestOperatorPair) -> Result<Vec<f64>> {
    let k = iim.k();
    if ops.k() != k {
        return Err(invalid(format!(
            "operators act on K = {} modes, matrix has K = {k}",
            ops.k()
        )));
    }
    // Ψ(Φ ẽ_i, ẽ_j) = psi[j] · phi[:, i]; sum over i first.
    let mut out = nalgebra::DVector::zeros(ops.dim());
    for j in 0..k {
        let weighted = &ops.phi * iim.entries.column(j);
        out += &ops.psi[j] * weighted;
    }
    Ok(out.iter().copied().collect())
}

/// Result of [`projection_error_sq`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionError {
    pub estimate: McEstimate,
    pub analytic: f64,
}

/// Mean-square error of the stochastic integral of `Φ` caused by dropping the
/// modes `K < j ≤ J`: `E‖Σ_{j>K} √η_j β^j_h Φ ẽ_j‖²`, estimated over `n`
/// replicates, together with the exact value `h Σ_{j>K} η_j ‖Φ ẽ_j‖²`.
///
/// `phi_full` has `J` columns; `model` must define `η_j` up to `J`.
#[allow(clippy::too_many_arguments)]
pub fn projection_error_sq(
    model: &CovarianceModel,
    k: usize,
    j_full: usize,
    h: f64,
    phi_full: &DMatrix<f64>,
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<ProjectionError> {
    if j_full <= k {
        return Err(invalid(format!("full level J = {j_full} must exceed K = {k}")));
    }
    if phi_full.ncols() != j_full {
        return Err(invalid(format!(
            "phi_full has {} columns, expected J = {j_full}",
            phi_full.ncols()
        )));
    }
    if h.is_nan() || h <= 0.0 {
        return Err(invalid(format!("step size h = {h} must be positive")));
    }
    let eta: Vec<f64> = (k + 1..=j_full)
        .map(|j| {
            model
                .eta_at(j)
                .ok_or_else(|| invalid(format!("spectrum does not define eta_{j}")))
        })
        .collect::<Result<_>>()?;
    let analytic = h * eta
        .iter()
        .enumerate()
        .map(|(t, e)| e * phi_full.column(k + t).norm_squared())
        .sum::<f64>();

    let samples = run_replicates(n, workers, |rep| {
        let mut beta = vec![0.0; eta.len()];
        ReplicateStreams::new(seed, rep).fill_normals(Purpose::Projection, 0, &mut beta);
        let mut x = nalgebra::DVector::zeros(phi_full.nrows());
        for (t, (b, e)) in beta.iter().zip(&eta).enumerate() {
            x.axpy((e * h).sqrt() * b, &phi_full.column(k + t), 1.0);
        }
        Ok(x.norm_squared())
    })?;
    Ok(ProjectionError {
        estimate: estimate(&samples),
        analytic,
    })
}
