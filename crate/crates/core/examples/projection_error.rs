//! Contracts an iterated-integral matrix with test operators and measures the
//! error from dropping modes beyond `K`.
//!
//! cargo run --release --example projection_error -- [N] [workers]

use nalgebra::DMatrix;
use qlevy::assembly::projection_error_sq;
use qlevy::harness::sample_step;
use qlevy::{contract, make_model, Algorithm, SpectrumSpec, TestOperatorPair};

fn main() -> qlevy::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(20_000, |s| s.parse().expect("N"));
    let workers: usize = args.next().map_or(1, |s| s.parse().expect("workers"));
    let full = make_model(&SpectrumSpec::PowerLaw { c: 1.0, rho: 2.0 }, 16)?;
    let k = 4;
    let model = full.with_k(k)?;

    let phi = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -0.5, 2.0, 1.5]));
    let psi = (0..k).map(|j| DMatrix::identity(k, k) * (j + 1) as f64).collect();
    let ops = TestOperatorPair::new(phi, psi)?;
    let (_, iim) = sample_step(&model, 0.01, 32, Algorithm::Alg2, 0, 0)?;
    println!("Σ_j Ψ_j Φ I e_j = {:.4?}", contract(&iim, &ops)?);

    let phi_full = DMatrix::from_fn(k, 16, |a, b| if a == b % k { 1.0 / (1 + b / k) as f64 } else { 0.0 });
    for j_full in [8, 12, 16] {
        let err = projection_error_sq(&full, k, j_full, 0.01, &phi_full.columns(0, j_full).into_owned(), n, 0, workers)?;
        println!(
            "J = {j_full:>2}: estimate {:.4e} ± {:.1e}, exact {:.4e}",
            err.estimate.mean, err.estimate.stderr, err.analytic
        );
    }
    Ok(())
}
