//! The closed-form square root of the tail covariance against a numerical
//! symmetric square root, and its smallest eigenvalue against `2 η_{K−1} η_K`.
//!
//! cargo run --release --example cholesky_closed_form -- [K]

use std::time::Instant;

use qlevy::harness::replicate_increment;
use qlevy::kronkit::sym_sqrt;
use qlevy::levyarea::{sigma_infinity, sqrt_sigma_infinity};
use qlevy::{make_model, SpectrumSpec};

fn main() -> qlevy::Result<()> {
    let k: usize = std::env::args().nth(1).map_or(8, |s| s.parse().expect("K"));
    let model = make_model(&SpectrumSpec::PowerLaw { c: 1.0, rho: 2.0 }, k)?;
    let eta = model.eta();
    println!("K = {k}, L = {}, floor 2 η_(K-1) η_K = {:.4e}", k * (k - 1) / 2, 2.0 * eta[k - 2] * eta[k - 1]);
    println!("{:>4} {:>12} {:>12} {:>10} {:>10}", "rep", "residual", "lambda_min", "closed", "eigen");
    for rep in 0..5 {
        let inc = replicate_increment(&model, 0.01, 1, rep)?;
        let sigma = sigma_infinity(&model, &inc)?;
        let t = Instant::now();
        let s = sqrt_sigma_infinity(&model, &inc)?;
        let closed = t.elapsed();
        let t = Instant::now();
        sym_sqrt(&sigma, 1e-12)?;
        let eigen = t.elapsed();
        let residual = (&s * s.transpose() - sigma.as_matrix()).norm() / sigma.frobenius_norm();
        println!(
            "{rep:>4} {residual:>12.2e} {:>12.4e} {:>10.1?} {:>10.1?}",
            sigma.eigenvalues()[0],
            closed,
            eigen
        );
    }
    Ok(())
}
