//! Error of the tail-corrected sampler for growing `K` at fixed `D`,
//! normalised by `h² / (D² min_j η_j)`. The rate is an upper bound, so the
//! ratio may fall with `K` for fast-decaying spectra.
//!
//! cargo run --release --example spectrum_bound -- [N] [workers]

use qlevy::harness::eta_bound_check;
use qlevy::SpectrumSpec;

fn main() -> qlevy::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(1000, |s| s.parse().expect("N"));
    let workers: usize = args.next().map_or(1, |s| s.parse().expect("workers"));
    for rho in [1.5, 2.0, 3.0] {
        let spec = SpectrumSpec::PowerLaw { c: 1.0, rho };
        let report = eta_bound_check(&spec, 0.01, 16, &[4, 8, 16], n, 0, workers)?;
        println!("rho = {rho}, D = {}", report.d);
        for row in &report.rows {
            println!(
                "  K = {:>3}  min eta {:>10.3e}  mse {:>10.3e}  ratio {:>10.3e}",
                row.k, row.min_eta, row.estimate.mean, row.ratio
            );
        }
        println!("  spread {:.2}, stable {:?}", report.spread, report.stable);
    }
    Ok(())
}
