//! Monte-Carlo plumbing: parallel replicate evaluation, order-stable
//! reductions and sample means with standard errors.

use rayon::prelude::*;

use crate::error::{invalid, Result};

/// A sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl McEstimate {
    /// Distance from `expected` in standard errors.
    pub fn z_score(&self, expected: f64) -> f64 {
        let diff = self.mean - expected;
        if self.stderr > 0.0 {
            diff / self.stderr
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }
}

/// Pairwise (tree) summation. The result depends only on the order of
/// `xs`, never on how the values were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Two-pass mean and standard error of the mean.
pub fn estimate(xs: &[f64]) -> McEstimate {
    let n = xs.len();
    if n == 0 {
        return McEstimate {
            mean: f64::NAN,
            stderr: f64::NAN,
            n,
        };
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return McEstimate {
            mean,
            stderr: f64::NAN,
            n,
        };
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    McEstimate {
        mean,
        stderr: (var / n as f64).sqrt(),
        n,
    }
}

/// Column `c` of a replicate-major table.
pub fn column<const M: usize>(rows: &[[f64; M]], c: usize) -> Vec<f64> {
    rows.iter().map(|r| r[c]).collect()
}

/// Evaluates `f(replicate)` for `0..n` on `workers` threads and returns the
/// results in replicate order.
pub fn run_replicates<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    if workers <= 1 {
        return (0..n as u64).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| (0..n as u64).into_par_iter().map(&f).collect())
}
