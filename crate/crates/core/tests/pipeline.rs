//! Sketch, store, reload, train and score through the library API.

use std::fs::File;
use std::io::{BufReader, BufWriter};

use bbit_svm::dataio::{load_svmlight, payload_len, split, SketchMatrix};
use bbit_svm::expansion::expand_dataset;
use bbit_svm::sketching::{sketch_dataset, FamilyKind};
use bbit_svm::svm::{evaluate, train, BinaryRows, TrainParams};
use bbit_svm::synth::{planted_dataset, SyntheticConfig};

#[test]
fn file_round_trip_then_train() {
    let planted = planted_dataset(&SyntheticConfig {
        n: 400,
        universe_size: 1 << 16,
        prototypes_per_class: 4,
        seed: 8,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let (tr, te) = split(&planted.data, 0.25, 3).unwrap();
    let (k, b, seed) = (64, 4, 99);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.sk");
    let sk = sketch_dataset(&tr, k, b, FamilyKind::Affine, seed).unwrap();
    sk.write_to(BufWriter::new(File::create(&path).unwrap()))
        .unwrap();
    let len = std::fs::metadata(&path).unwrap().len();
    assert!(len > payload_len(tr.len() as u64, k as u64, b));

    let back = SketchMatrix::read_from(BufReader::new(File::open(&path).unwrap())).unwrap();
    assert_eq!(back, sk);
    assert_eq!(back.labels().unwrap(), tr.labels());

    let params = TrainParams::default();
    let out = train(&expand_dataset(&back, true), tr.labels(), &params).unwrap();
    let te_sk = sketch_dataset(&te, k, b, FamilyKind::Affine, seed).unwrap();
    let hashed = evaluate(&out.model, &expand_dataset(&te_sk, true), te.labels()).unwrap();

    let d = tr.universe_size() as usize;
    let raw_model = train(
        &BinaryRows::new(tr.samples(), d, true),
        tr.labels(),
        &params,
    )
    .unwrap();
    let raw = evaluate(
        &raw_model.model,
        &BinaryRows::new(te.samples(), d, true),
        te.labels(),
    )
    .unwrap();
    // 5% label noise caps both near 0.95
    assert!(raw.accuracy > 0.85, "raw {}", raw.accuracy);
    assert!(hashed.accuracy > 0.8, "hashed {}", hashed.accuracy);
}

#[test]
fn svmlight_values_are_binarized() {
    let text = "+1 1:0.3 4:2.5 9:0\n-1 2:1 3:-1\n";
    let data = load_svmlight(text.as_bytes(), Some(16)).unwrap();
    assert_eq!(data.samples()[0].indices(), &[0, 3]);
    assert_eq!(data.samples()[1].indices(), &[1, 2]);
    assert_eq!(data.universe_size(), 16);
}
