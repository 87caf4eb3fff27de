//! Structured linear algebra for the pair-index calculus.
//!
//! The samplers only ever need the strict upper triangle of antisymmetric
//! `K × K` matrices. With `vec` meaning column stacking, `vec(Aᵀ)` is the
//! row-major traversal of `A`, and the selection operator `H_K` picks the
//! entries `(1,2), (1,3), …, (1,K), (2,3), …, (K-1,K)` from it. The
//! commutation operator `S_K` maps `vec(M)` to `vec(Mᵀ)`. Neither is ever
//! materialised here: every operation works directly on `K × K` matrices or
//! on length-`L` vectors, `L = K(K-1)/2`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::covariance::CovarianceModel;
use crate::error::{invalid, Error, Result};

/// Row-major enumeration of the strict upper-triangle pairs of a `K × K`
/// matrix. Pair indices are 1-based at the interface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionMap {
    k: usize,
    pairs: Vec<(usize, usize)>,
}

impl SelectionMap {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of pairs, `K(K-1)/2`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// All pairs `(i, j)`, `1 ≤ i < j ≤ K`, in map order.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// The pair at 1-based position `p`.
    pub fn pair(&self, p: usize) -> Option<(usize, usize)> {
        p.checked_sub(1).and_then(|q| self.pairs.get(q).copied())
    }

    /// 1-based position of the pair `(i, j)`; `None` unless `1 ≤ i < j ≤ K`.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        if i == 0 || i >= j || j > self.k {
            return None;
        }
        Some(self.slot(i - 1, j - 1) + 1)
    }

    /// 0-based storage slot of the 0-based pair `(i, j)`, `i < j`.
    #[inline]
    pub(crate) fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.k);
        i * self.k - i * (i + 1) / 2 + (j - i - 1)
    }

    /// 1-based positions in `vec(Aᵀ)` (row-major order of `A`) that the
    /// selection picks, i.e. the column index of the single 1 in each row of
    /// the dense selection matrix.
    pub fn selected_vec_positions(&self) -> Vec<usize> {
        self.pairs
            .iter()
            .map(|&(i, j)| (i - 1) * self.k + j)
            .collect()
    }
}

/// Builds the pair enumeration for `K` basis functions.
pub fn pair_index_map(k: usize) -> Result<SelectionMap> {
    if k == 0 {
        return Err(invalid("K must be at least 1"));
    }
    let pairs = (1..=k)
        .flat_map(|i| (i + 1..=k).map(move |j| (i, j)))
        .collect();
    Ok(SelectionMap { k, pairs })
}

fn check_square(map: &SelectionMap, m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != map.k || m.ncols() != map.k {
        return Err(invalid(format!(
            "expected a {k}x{k} matrix, got {}x{}",
            m.nrows(),
            m.ncols(),
            k = map.k
        )));
    }
    Ok(())
}

/// The action of the selection operator on `vec(mᵀ)`: the strict upper
/// triangle of `m` in map order.
pub fn apply_selection(map: &SelectionMap, m: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_square(map, m)?;
    Ok(map.pairs.iter().map(|&(i, j)| m[(i - 1, j - 1)]).collect())
}

/// Places `v` in the strict upper triangle and `-v` in the strict lower
/// triangle. This is the reshaped action of `(I - S_K) H_Kᵀ`.
pub fn embed_antisymmetric(map: &SelectionMap, v: &[f64]) -> Result<DMatrix<f64>> {
    if v.len() != map.len() {
        return Err(invalid(format!(
            "expected {} pair values, got {}",
            map.len(),
            v.len()
        )));
    }
    let mut a = DMatrix::zeros(map.k, map.k);
    for (&(i, j), &x) in map.pairs.iter().zip(v) {
        a[(i - 1, j - 1)] = x;
        a[(j - 1, i - 1)] = -x;
    }
    Ok(a)
}

/// `S_K` acting on `vec(m)`, reshaped back: the transpose of `m`.
pub fn commutation_apply(k: usize, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != k || m.ncols() != k {
        return Err(invalid(format!(
            "expected a {k}x{k} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.transpose())
}

/// Diagonal of `Q̃_K = H_K (Q_K^{1/2} ⊗ Q_K^{1/2}) H_Kᵀ`; the entry for the
/// pair `(i, j)` is `√(η_i η_j)`.
pub fn qtilde_diagonal(model: &CovarianceModel, map: &SelectionMap) -> Vec<f64> {
    let eta = model.eta();
    debug_assert!(eta.len() >= map.k);
    map.pairs
        .iter()
        .map(|&(i, j)| (eta[i - 1] * eta[j - 1]).sqrt())
        .collect()
}

/// A real symmetric matrix. Writes go to both triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    inner: DMatrix<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            inner: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut s = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            s.inner[(i, i)] = x;
        }
        s
    }

    /// Evaluates `f(i, j)` on the upper triangle (`i ≤ j`) and mirrors it.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut inner = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x = f(i, j);
                inner[(i, j)] = x;
                inner[(j, i)] = x;
            }
        }
        Self { inner }
    }

    /// Accepts `m` if it is square and symmetric to within `tol` relative to
    /// its largest entry; the result is the exact symmetric part.
    pub fn from_matrix(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(invalid("symmetric matrix must be square"));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let n = m.nrows();
        for i in 0..n {
            for j in i + 1..n {
                if (m[(i, j)] - m[(j, i)]).abs() > tol * scale {
                    return Err(invalid(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        let inner = (&m + m.transpose()) * 0.5;
        Ok(Self { inner })
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.inner[(i, j)] = x;
        self.inner[(j, i)] = x;
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.inner.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Symmetric positive semidefinite square root via a symmetric
/// eigendecomposition.
///
/// Eigenvalues in `[-tol·‖m‖₂, 0)` are clamped to zero; anything more
/// negative is rejected.
pub fn sym_sqrt(m: &SymmetricMatrix, tol: f64) -> Result<SymmetricMatrix> {
    let n = m.dim();
    if n == 0 {
        return Ok(SymmetricMatrix::zeros(0));
    }
    let eig = SymmetricEigen::new(m.inner.clone());
    let spectral = eig.eigenvalues.amax();
    let threshold = tol * spectral;
    let mut roots = Vec::with_capacity(n);
    for &lambda in eig.eigenvalues.iter() {
        if lambda < -threshold {
            return Err(Error::NotPositiveSemidefinite {
                eigenvalue: lambda,
                threshold,
            });
        }
        roots.push(lambda.max(0.0).sqrt());
    }
    let vecs = &eig.eigenvectors;
    Ok(SymmetricMatrix::from_upper_fn(n, |i, j| {
        (0..n).map(|c| vecs[(i, c)] * roots[c] * vecs[(j, c)]).sum()
    }))
}
