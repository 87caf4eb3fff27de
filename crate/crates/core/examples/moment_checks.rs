//! First and second moments of the assembled matrix against their exact
//! values, for a correct model and for a deliberately mis-scaled one.
//!
//! cargo run --release --example moment_checks -- [N] [workers]

use qlevy::harness::{moment_suite, moment_suite_against, CheckKind};
use qlevy::{make_model, Algorithm, SpectrumSpec};

fn main() -> qlevy::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(20_000, |s| s.parse().expect("N"));
    let workers: usize = args.next().map_or(1, |s| s.parse().expect("workers"));
    let model = make_model(&SpectrumSpec::PowerLaw { c: 1.0, rho: 2.0 }, 3)?;

    for alg in [Algorithm::Alg1, Algorithm::Alg2] {
        let report = moment_suite(&model, 0.1, 8, n, 0, alg, workers)?;
        println!("{alg}: {} checks, max |z| {:.2}, passed {}", report.checks.len(), report.max_abs_z(), report.passed());
        for c in report.checks.iter().take(4) {
            if let CheckKind::Statistical { estimate, expected, z } = c.kind {
                println!("  {:<40} {:>11.4e} {:>11.4e} {:>6.2}", c.name, estimate.mean, expected, z);
            }
        }
    }
    let wrong = model.scaled(2.0)?;
    let control = moment_suite_against(&wrong, &model, 0.1, 8, n, 0, Algorithm::Alg2, workers)?;
    println!(
        "mis-scaled control: {} failing checks, max |z| {:.1}",
        control.failures().count(),
        control.max_abs_z()
    );
    Ok(())
}
