#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Column-stacking `vec`.
pub fn vec_col(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), m.iter().copied())
}

/// Inverse of [`vec_col`] for a square matrix.
pub fn unvec(v: &DVector<f64>, k: usize) -> DMatrix<f64> {
    DMatrix::from_iterator(k, k, v.iter().copied())
}

fn unit(k: usize, i: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(k, 1);
    e[(i, 0)] = 1.0;
    e
}

/// Dense selection matrix: block-diagonal with blocks `[0_{(K−i)×i}  I_{K−i}]`,
/// `i = 1, …, K`, so that it picks the strict upper triangle from `vec(Aᵀ)`.
pub fn dense_selection(k: usize) -> DMatrix<f64> {
    let l = k * (k - 1) / 2;
    let mut h = DMatrix::zeros(l, k * k);
    let mut row = 0;
    for i in 1..=k {
        let mut block = DMatrix::zeros(k - i, k);
        block.view_mut((0, i), (k - i, k - i)).fill_with_identity();
        h.view_mut((row, (i - 1) * k), (k - i, k)).copy_from(&block);
        row += k - i;
    }
    h
}

/// Dense commutation matrix `S_K = Σ_i e_iᵀ ⊗ (I_K ⊗ e_i)`.
pub fn dense_commutation(k: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(k * k, k * k);
    let id = DMatrix::<f64>::identity(k, k);
    for i in 0..k {
        let e = unit(k, i);
        s += e.transpose().kronecker(&id.kronecker(&e));
    }
    s
}

/// Lévy area of the piecewise-linear interpolation of a two-dimensional
/// Brownian path on `[0, h]` sampled at `steps` points, from raw normals.
pub fn polygon_area(h: f64, steps: usize, rng: &mut impl Rng) -> f64 {
    let dt = h / steps as f64;
    let s = dt.sqrt();
    let (mut w1, mut w2, mut area) = (0.0, 0.0, 0.0);
    for _ in 0..steps {
        let d1: f64 = s * rng.sample::<f64, _>(StandardNormal);
        let d2: f64 = s * rng.sample::<f64, _>(StandardNormal);
        area += w1 * d2 - w2 * d1;
        w1 += d1;
        w2 += d2;
    }
    area / 2.0
}
