//! Covariance spectra and Q-Wiener increments.
//!
//! Only the eigenvalues `η_1 ≥ η_2 ≥ …` of the covariance operator enter the
//! computations; the eigenfunctions are implicit. The increment of the
//! projected process over a step `h` has coefficients
//! `Δw_j = √(h η_j) V_j` with `V` standard normal.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};

/// How the spectrum is given.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumSpec {
    /// Explicit eigenvalues `η_1, …, η_K`.
    List(Vec<f64>),
    /// `η_j = c · j^(-ρ)`.
    PowerLaw { c: f64, rho: f64 },
}

impl FromStr for SpectrumSpec {
    type Err = Error;

    /// Parses `pow:<c>:<rho>` or `list:<v1>,<v2>,…`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidSpectrum(format!("{why} in {s:?}"));
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| bad(&format!("malformed number {t:?}")))
        };
        if let Some(rest) = s.strip_prefix("pow:") {
            let (c, rho) = rest
                .split_once(':')
                .ok_or_else(|| bad("expected pow:<c>:<rho>"))?;
            Ok(SpectrumSpec::PowerLaw {
                c: num(c)?,
                rho: num(rho)?,
            })
        } else if let Some(rest) = s.strip_prefix("list:") {
            let values = rest.split(',').map(num).collect::<Result<Vec<_>>>()?;
            Ok(SpectrumSpec::List(values))
        } else {
            Err(bad("expected a pow: or list: prefix"))
        }
    }
}

impl fmt::Display for SpectrumSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectrumSpec::PowerLaw { c, rho } => write!(f, "pow:{c}:{rho}"),
            SpectrumSpec::List(v) => {
                write!(f, "list:")?;
                for (n, x) in v.iter().enumerate() {
                    if n > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
        }
    }
}

/// Relaxations of the default validation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ModelOptions {
    /// Permit power laws with `ρ ≤ 1` (cylindrical-type studies where the
    /// full trace diverges).
    pub allow_non_trace_class: bool,
    /// Permit explicit spectra that are not nonincreasing.
    pub allow_unordered: bool,
}

/// The spectrum of `Q`, truncated at level `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    spec: SpectrumSpec,
    eta: Vec<f64>,
}

/// Validates a spectrum specification at truncation level `k`.
pub fn make_model(spec: &SpectrumSpec, k: usize) -> Result<CovarianceModel> {
    make_model_with(spec, k, ModelOptions::default())
}

pub fn make_model_with(
    spec: &SpectrumSpec,
    k: usize,
    opts: ModelOptions,
) -> Result<CovarianceModel> {
    if k == 0 {
        return Err(invalid("K must be at least 1"));
    }
    let eta = match spec {
        SpectrumSpec::List(v) => {
            if v.len() != k {
                return Err(Error::InvalidSpectrum(format!(
                    "spectrum length {} != K = {k}",
                    v.len()
                )));
            }
            if !opts.allow_unordered && v.windows(2).any(|w| w[1] > w[0]) {
                return Err(Error::InvalidSpectrum(
                    "eigenvalues must be nonincreasing".into(),
                ));
            }
            v.clone()
        }
        &SpectrumSpec::PowerLaw { c, rho } => {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidSpectrum(format!("scale c = {c} must be positive")));
            }
            if !rho.is_finite() || rho < 0.0 {
                return Err(Error::InvalidSpectrum(format!("decay rho = {rho} must be >= 0")));
            }
            if rho <= 1.0 && !opts.allow_non_trace_class {
                return Err(Error::InvalidSpectrum(format!(
                    "decay rho = {rho} <= 1 is not trace class"
                )));
            }
            (1..=k).map(|j| c * (j as f64).powf(-rho)).collect()
        }
    };
    if let Some(bad) = eta.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidSpectrum(format!(
            "eigenvalue {bad} is not positive"
        )));
    }
    Ok(CovarianceModel {
        spec: spec.clone(),
        eta,
    })
}

impl CovarianceModel {
    /// Unit spectrum `η ≡ 1` of size `k`.
    pub fn unit(k: usize) -> Result<Self> {
        make_model(&SpectrumSpec::List(vec![1.0; k]), k)
    }

    pub fn k(&self) -> usize {
        self.eta.len()
    }

    /// `η_1, …, η_K`.
    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn spec(&self) -> &SpectrumSpec {
        &self.spec
    }

    /// `Σ_{j ≤ K} η_j`.
    pub fn trace_k(&self) -> f64 {
        self.eta.iter().sum()
    }

    pub fn min_eta(&self) -> f64 {
        self.eta.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_eta(&self) -> f64 {
        self.eta.iter().copied().fold(0.0, f64::max)
    }

    /// Eigenvalue `η_j` (1-based) beyond the truncation level, where the
    /// specification defines one.
    pub fn eta_at(&self, j: usize) -> Option<f64> {
        if j == 0 {
            return None;
        }
        match self.spec {
            SpectrumSpec::PowerLaw { c, rho } => Some(c * (j as f64).powf(-rho)),
            SpectrumSpec::List(ref v) => v.get(j - 1).copied(),
        }
    }

    /// The same model with every eigenvalue multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let spec = match self.spec {
            SpectrumSpec::PowerLaw { c, rho } => SpectrumSpec::PowerLaw { c: c * factor, rho },
            SpectrumSpec::List(ref v) => SpectrumSpec::List(v.iter().map(|x| x * factor).collect()),
        };
        make_model_with(
            &spec,
            self.k(),
            ModelOptions {
                allow_non_trace_class: true,
                allow_unordered: true,
            },
        )
    }

    /// Same spectrum truncated at another level.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        let spec = match self.spec {
            SpectrumSpec::PowerLaw { .. } => self.spec.clone(),
            SpectrumSpec::List(ref v) => {
                if k > v.len() {
                    return Err(invalid(format!(
                        "explicit spectrum has only {} eigenvalues",
                        v.len()
                    )));
                }
                SpectrumSpec::List(v[..k].to_vec())
            }
        };
        make_model_with(
            &spec,
            k,
            ModelOptions {
                allow_non_trace_class: true,
                allow_unordered: true,
            },
        )
    }

    /// Short human-readable description used in reports.
    pub fn summary(&self) -> String {
        format!("{} (K={})", self.spec, self.k())
    }
}

/// One step's increment coefficients together with the normals behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerIncrement {
    h: f64,
    v: Vec<f64>,
    dw: Vec<f64>,
}

impl WienerIncrement {
    /// Builds the increment from given standard normals `v`.
    pub fn from_normals(model: &CovarianceModel, h: f64, v: Vec<f64>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid(format!("step size h = {h} must be positive")));
        }
        if v.len() != model.k() {
            return Err(invalid(format!(
                "expected {} normals, got {}",
                model.k(),
                v.len()
            )));
        }
        let dw = v
            .iter()
            .zip(model.eta())
            .map(|(x, eta)| (h * eta).sqrt() * x)
            .collect();
        Ok(Self { h, v, dw })
    }

    pub fn k(&self) -> usize {
        self.v.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// The standard normals `V`.
    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// The increment coefficients `Δw_j`.
    pub fn dw(&self) -> &[f64] {
        &self.dw
    }

    /// `VᵀV`.
    pub fn v_norm_sq(&self) -> f64 {
        self.v.iter().map(|x| x * x).sum()
    }
}

/// Draws `Δw = √h Q_K^{1/2} V` with `V` standard normal from `rng`.
pub fn sample_increment<R: Rng + ?Sized>(
    model: &CovarianceModel,
    h: f64,
    rng: &mut R,
) -> Result<WienerIncrement> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("step size h = {h} must be positive")));
    }
    let v = (0..model.k()).map(|_| StandardNormal.sample(rng)).collect();
    WienerIncrement::from_normals(model, h, v)
}

/// `sup_{K < j ≤ J} η_j`, which is `η_{K+1}` for a nonincreasing spectrum and
/// zero when the range is empty.
pub fn projection_tail_sup(model: &CovarianceModel, k: usize, j_full: usize) -> Result<f64> {
    if j_full < k {
        return Err(invalid(format!("full level J = {j_full} below K = {k}")));
    }
    let mut sup = 0.0_f64;
    for j in k + 1..=j_full {
        let eta = model
            .eta_at(j)
            .ok_or_else(|| invalid(format!("spectrum does not define eta_{j}")))?;
        sup = sup.max(eta);
    }
    Ok(sup)
}
