//! Accuracy of hashed features against the raw baseline on planted data.
//!
//! Usage: `cargo run --release --example accuracy_grid -- [own] [cross] [trials]`

use bbit_svm::experiment::{run_experiment, ExperimentConfig, FeatureSet};
use bbit_svm::synth::{planted_dataset, SyntheticConfig};

fn arg(i: usize, default: usize) -> usize {
    std::env::args()
        .nth(i)
        .map(|s| s.parse().expect("numeric argument"))
        .unwrap_or(default)
}

fn main() -> bbit_svm::Result<()> {
    let synth = SyntheticConfig {
        own: arg(1, 50),
        cross: arg(2, 10),
        ..SyntheticConfig::default()
    };
    let planted = planted_dataset(&synth)?;
    let cfg = ExperimentConfig {
        bits: vec![1, 2, 4, 8],
        ks: vec![50, 100, 200],
        trials: arg(3, 4),
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&planted.data, &cfg)?;
    print!("{}", report.table());

    let raw = report.best(FeatureSet::Raw).unwrap();
    println!(
        "best raw: C={} acc={:.2}%",
        raw.c,
        100.0 * raw.mean_accuracy
    );
    for &b in &cfg.bits {
        let best = report.best(FeatureSet::Hashed { b, k: 200 }).unwrap();
        println!(
            "best b={b} k=200: C={} acc={:.2}% (gap {:+.2} points)",
            best.c,
            100.0 * best.mean_accuracy,
            100.0 * (best.mean_accuracy - raw.mean_accuracy)
        );
    }
    Ok(())
}
