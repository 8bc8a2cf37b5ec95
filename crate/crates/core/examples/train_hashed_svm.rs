//! Train on expanded sketches of planted data, save the model, and score the
//! held-out part.

use std::time::Instant;

use bbit_svm::dataio::split;
use bbit_svm::expansion::expand_dataset;
use bbit_svm::sketching::{sketch_dataset, FamilyKind};
use bbit_svm::svm::{evaluate, train, FeatureSpace, SvmModel, TrainParams};
use bbit_svm::synth::{planted_dataset, SyntheticConfig};

fn main() -> bbit_svm::Result<()> {
    let planted = planted_dataset(&SyntheticConfig::default())?;
    let (train_set, test_set) = split(&planted.data, 0.2, 1)?;
    let (k, b, seed) = (200, 8, 42);

    let start = Instant::now();
    let train_sk = sketch_dataset(&train_set, k, b, FamilyKind::Exact, seed)?;
    let test_sk = sketch_dataset(&test_set, k, b, FamilyKind::Exact, seed)?;
    println!("sketched in {:.2}s", start.elapsed().as_secs_f64());

    let rows = expand_dataset(&train_sk, true);
    let params = TrainParams {
        c: 1.0,
        ..TrainParams::default()
    };
    let mut out = train(&rows, train_set.labels(), &params)?;
    out.model.features = FeatureSpace::Sketch {
        k,
        b,
        family: train_sk.family(),
        normalize: true,
    };
    println!(
        "epochs {} converged {} gap {:.4} nSV {}",
        out.model.epochs_run, out.converged, out.model.duality_gap, out.model.n_support
    );

    let mut bytes = Vec::new();
    out.model.write_to(&mut bytes)?;
    let model = SvmModel::read_from(&bytes[..])?;
    let acc = evaluate(&model, &expand_dataset(&test_sk, true), test_set.labels())?;
    println!(
        "test accuracy {:.2}% ({}/{})",
        100.0 * acc.accuracy,
        acc.correct,
        acc.total
    );
    Ok(())
}
