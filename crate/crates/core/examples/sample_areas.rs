//! Samples one step of the iterated-integral matrix with both algorithms and
//! checks the pathwise identities.
//!
//! cargo run --release --example sample_areas -- [K] [h] [seed]

use qlevy::harness::sample_step;
use qlevy::{choose_d, make_model, Algorithm, DRule, SpectrumSpec};

fn main() -> qlevy::Result<()> {
    let mut args = std::env::args().skip(1);
    let k: usize = args.next().map_or(4, |s| s.parse().expect("K"));
    let h: f64 = args.next().map_or(0.01, |s| s.parse().expect("h"));
    let seed: u64 = args.next().map_or(42, |s| s.parse().expect("seed"));
    let model = make_model(&SpectrumSpec::PowerLaw { c: 1.0, rho: 2.0 }, k)?;
    println!("{}", model.summary());

    for (alg, rule) in [(Algorithm::Alg1, DRule::Alg1), (Algorithm::Alg2, DRule::Alg2K)] {
        let d = choose_d(rule, h, 1.0, &model)?;
        let (inc, iim) = sample_step(&model, h, d, alg, seed, 0)?;
        println!("\n{alg}, D = {d}");
        println!("dW = {:.5?}", inc.dw());
        print!("I(h) ={:.4e}", iim.entries);
        let eta = model.eta();
        let mut worst: f64 = 0.0;
        for i in 0..k {
            worst = worst.max((iim.entries[(i, i)] - (inc.dw()[i].powi(2) - eta[i] * h) / 2.0).abs());
            for j in i + 1..k {
                let s = iim.entries[(i, j)] + iim.entries[(j, i)] - inc.dw()[i] * inc.dw()[j];
                worst = worst.max(s.abs());
            }
        }
        println!("largest identity defect: {worst:.2e}");
    }
    Ok(())
}
