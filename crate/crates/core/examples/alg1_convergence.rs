//! Truncation error of the first algorithm against `D`, per pair and summed,
//! compared with the exact law `(3/2)(h²/π²) η_i η_j c_D`.
//!
//! cargo run --release --example alg1_convergence -- [N] [workers]

use std::time::Instant;

use qlevy::harness::{alg1_mse_mc, fit_slope};
use qlevy::{make_model, SpectrumSpec};

fn main() -> qlevy::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(10_000, |s| s.parse().expect("N"));
    let workers: usize = args.next().map_or(1, |s| s.parse().expect("workers"));
    let model = make_model(&SpectrumSpec::PowerLaw { c: 1.0, rho: 2.0 }, 4)?;
    let h = 0.01;
    let grid = [1, 4, 16, 64];

    let start = Instant::now();
    let study = alg1_mse_mc(&model, h, &grid, n, 0, workers)?;
    println!("{} replicates, D_ref = {}, {:.1?}", n, study.d_ref, start.elapsed());
    println!("{:>4} {:>7} {:>12} {:>12} {:>8}", "D", "pair", "mse", "analytic", "z");
    for row in &study.rows {
        for p in &row.pairs {
            println!(
                "{:>4} {:>7} {:>12.4e} {:>12.4e} {:>8.2}",
                row.d,
                format!("({},{})", p.pair.0, p.pair.1),
                p.estimate.mean,
                p.analytic,
                p.estimate.z_score(p.analytic)
            );
        }
        println!(
            "{:>4} {:>7} {:>12.4e} {:>12.4e} {:>8.2}   bound {:.4e}",
            row.d,
            "sum",
            row.total.mean,
            row.total_analytic,
            row.total.z_score(row.total_analytic),
            row.summed_bound
        );
    }
    let pts: Vec<(f64, f64)> = study.rows.iter().map(|r| (r.d as f64, r.total.mean)).collect();
    let (slope, _) = fit_slope(&pts)?;
    println!("log-log slope of the summed error: {slope:.3}");
    Ok(())
}
