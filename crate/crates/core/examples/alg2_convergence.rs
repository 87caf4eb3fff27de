//! Error of the tail-corrected sampler against `D`, with its slope and the
//! comparison against the truncated series.
//!
//! cargo run --release --example alg2_convergence -- [N] [workers]

use qlevy::harness::{convergence, fit_slope};
use qlevy::{make_model, Algorithm, SpectrumSpec};

fn main() -> qlevy::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(2000, |s| s.parse().expect("N"));
    let workers: usize = args.next().map_or(1, |s| s.parse().expect("workers"));
    let model = make_model(&SpectrumSpec::PowerLaw { c: 1.0, rho: 2.0 }, 4)?;
    let grid = [4, 8, 16, 32, 64];

    let one = convergence(&model, 0.01, Algorithm::Alg1, &grid, n, 0, workers)?;
    let two = convergence(&model, 0.01, Algorithm::Alg2, &grid, n, 0, workers)?;
    println!("{:>4} {:>12} {:>12} {:>8}", "D", "alg1", "alg2", "ratio");
    for (a, b) in one.rows.iter().zip(&two.rows) {
        println!("{:>4} {:>12.4e} {:>12.4e} {:>8.1}", a.d, a.mse, b.mse, a.mse / b.mse);
    }
    let pts: Vec<(f64, f64)> = two.rows.iter().map(|r| (r.d as f64, r.mse)).collect();
    println!("slopes: alg1 {:.3}, alg2 {:.3}", one.fit.unwrap().0, fit_slope(&pts)?.0);
    two.write_csv(std::io::stdout())?;
    Ok(())
}
