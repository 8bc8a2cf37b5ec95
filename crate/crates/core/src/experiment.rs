//! Repeated random-split accuracy experiments over a `(b, k, C)` grid, with
//! the original binary features as a baseline.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataio::{split_positions, LabeledDataset};
use crate::error::{Error, Result};
use crate::expansion::expand_dataset;
use crate::sketching::{minhash_sets, FamilyId, FamilyKind};
use crate::svm::{evaluate, train, BinaryRows, TrainParams};

/// Slack allowed between consecutive `k` when flagging an accuracy trend.
pub const MONOTONE_SLACK: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub bits: Vec<u8>,
    pub ks: Vec<usize>,
    pub cs: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub test_fraction: f64,
    pub family: FamilyKind,
    pub normalize: bool,
    pub tolerance: f64,
    pub max_epochs: usize,
    /// Also train on the original binary features.
    pub include_raw: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            bits: vec![1, 2, 4, 8, 16],
            ks: vec![30, 50, 100, 150, 200, 300, 400, 500],
            cs: vec![0.01, 0.1, 1.0, 10.0],
            trials: 5,
            master_seed: 0,
            test_fraction: 0.2,
            family: FamilyKind::Exact,
            normalize: true,
            tolerance: 0.1,
            max_epochs: 1000,
            include_raw: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureSet {
    Raw,
    Hashed { b: u8, k: usize },
}

/// Seeds used by one trial. Derived from the master seed and the trial
/// number alone, so results do not depend on execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialSeeds {
    pub split: u64,
    pub family: u64,
    pub svm: u64,
}

pub fn trial_seeds(master_seed: u64, trial: usize) -> TrialSeeds {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial as u64);
    TrialSeeds {
        split: rng.next_u64(),
        family: rng.next_u64(),
        svm: rng.next_u64(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub features: FeatureSet,
    pub c: f64,
    /// Test accuracy of each trial, in trial order.
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Sample standard deviation over trials.
    pub std_accuracy: f64,
    pub mean_train_seconds: f64,
    pub mean_support_vectors: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    cells: Vec<CellResult>,
    bits: Vec<u8>,
    ks: Vec<usize>,
    cs: Vec<f64>,
}

struct Run {
    features: FeatureSet,
    c: f64,
    accuracy: f64,
    seconds: f64,
    support_vectors: usize,
}

fn validate(data: &LabeledDataset, cfg: &ExperimentConfig) -> Result<()> {
    if cfg.trials < 2 {
        return Err(Error::invalid(
            "at least 2 trials are needed for a standard deviation",
        ));
    }
    if cfg.cs.is_empty() || (cfg.bits.is_empty() && !cfg.include_raw) {
        return Err(Error::invalid("empty experiment grid"));
    }
    if !cfg.bits.is_empty() && cfg.ks.is_empty() {
        return Err(Error::invalid("no k values given"));
    }
    if let Some(b) = cfg.bits.iter().find(|b| !(1..=16).contains(*b)) {
        return Err(Error::invalid(format!("b must lie in [1, 16], got {b}")));
    }
    if cfg.ks.contains(&0) {
        return Err(Error::invalid("k must be at least 1"));
    }
    if let Some(c) = cfg.cs.iter().find(|c| c.is_nan() || **c <= 0.0) {
        return Err(Error::invalid(format!("C must be positive, got {c}")));
    }
    if !cfg.bits.is_empty() {
        FamilyId::new(cfg.family, data.universe_size(), 0)?;
    }
    split_positions(data.len(), cfg.test_fraction, 0)?;
    Ok(())
}

fn run_trial(data: &LabeledDataset, cfg: &ExperimentConfig, trial: usize) -> Result<Vec<Run>> {
    let seeds = trial_seeds(cfg.master_seed, trial);
    let (train_pos, test_pos) = split_positions(data.len(), cfg.test_fraction, seeds.split)?;
    let train_set = data.subset(&train_pos)?;
    let test_set = data.subset(&test_pos)?;
    let mut runs = Vec::new();

    let fit = |features: FeatureSet, c: f64, fit: &dyn Fn(&TrainParams) -> Result<(f64, usize)>| {
        let params = TrainParams {
            c,
            tolerance: cfg.tolerance,
            max_epochs: cfg.max_epochs,
            seed: seeds.svm,
        };
        let start = Instant::now();
        let (accuracy, support_vectors) = fit(&params)?;
        Ok::<_, Error>(Run {
            features,
            c,
            accuracy,
            seconds: start.elapsed().as_secs_f64(),
            support_vectors,
        })
    };

    if cfg.include_raw {
        let d = data.universe_size() as usize;
        let train_rows = BinaryRows::new(train_set.samples(), d, cfg.normalize);
        let test_rows = BinaryRows::new(test_set.samples(), d, cfg.normalize);
        for &c in &cfg.cs {
            runs.push(fit(FeatureSet::Raw, c, &|p| {
                let out = train(&train_rows, train_set.labels(), p)?;
                let acc = evaluate(&out.model, &test_rows, test_set.labels())?.accuracy;
                Ok((acc, out.model.n_support))
            })?);
        }
    }

    if !cfg.bits.is_empty() {
        let k_max = *cfg.ks.iter().max().unwrap();
        let family = FamilyId::new(cfg.family, data.universe_size(), seeds.family)?;
        let minima = minhash_sets(data.samples(), k_max, family)?;
        for &b in &cfg.bits {
            for &k in &cfg.ks {
                let mut sketches = minima.truncate(k, b)?;
                sketches.set_labels(data.labels().to_vec())?;
                let train_sk = sketches.select_rows(&train_pos);
                let test_sk = sketches.select_rows(&test_pos);
                let train_rows = expand_dataset(&train_sk, cfg.normalize);
                let test_rows = expand_dataset(&test_sk, cfg.normalize);
                for &c in &cfg.cs {
                    runs.push(fit(FeatureSet::Hashed { b, k }, c, &|p| {
                        let out = train(&train_rows, train_set.labels(), p)?;
                        let acc = evaluate(&out.model, &test_rows, test_set.labels())?.accuracy;
                        Ok((acc, out.model.n_support))
                    })?);
                }
            }
        }
    }
    Ok(runs)
}

/// Runs every trial (in parallel) and aggregates per cell.
pub fn run_experiment(data: &LabeledDataset, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    validate(data, cfg)?;
    let trials: Vec<Vec<Run>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(data, cfg, t))
        .collect::<Result<_>>()?;

    // every trial produces its runs in the same cell order
    let n_cells = trials[0].len();
    let t = cfg.trials as f64;
    let cells = (0..n_cells)
        .map(|cell| {
            let runs: Vec<&Run> = trials.iter().map(|r| &r[cell]).collect();
            let accuracies: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
            let mean = accuracies.iter().sum::<f64>() / t;
            let var = accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (t - 1.0);
            CellResult {
                features: runs[0].features,
                c: runs[0].c,
                accuracies,
                mean_accuracy: mean,
                std_accuracy: var.sqrt(),
                mean_train_seconds: runs.iter().map(|r| r.seconds).sum::<f64>() / t,
                mean_support_vectors: runs.iter().map(|r| r.support_vectors as f64).sum::<f64>()
                    / t,
            }
        })
        .collect();

    Ok(ExperimentReport {
        cells,
        bits: cfg.bits.clone(),
        ks: cfg.ks.clone(),
        cs: cfg.cs.clone(),
    })
}

impl ExperimentReport {
    pub fn cells(&self) -> &[CellResult] {
        &self.cells
    }

    pub fn cell(&self, features: FeatureSet, c: f64) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|r| r.features == features && r.c == c)
    }

    /// Cell with the highest mean accuracy over all `C` for these features.
    pub fn best(&self, features: FeatureSet) -> Option<&CellResult> {
        self.cells
            .iter()
            .filter(|r| r.features == features)
            .max_by(|a, b| a.mean_accuracy.total_cmp(&b.mean_accuracy))
    }

    /// Whether mean accuracy never drops by more than [`MONOTONE_SLACK`]
    /// as `k` grows, for fixed `b` and `C`.
    pub fn monotone_in_k(&self, b: u8, c: f64) -> Option<bool> {
        let mut ks = self.ks.clone();
        ks.sort_unstable();
        let means = ks
            .iter()
            .map(|&k| {
                self.cell(FeatureSet::Hashed { b, k }, c)
                    .map(|r| r.mean_accuracy)
            })
            .collect::<Option<Vec<_>>>()?;
        Some(means.windows(2).all(|w| w[1] >= w[0] - MONOTONE_SLACK))
    }

    /// Aligned human-readable table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<8} {:>3} {:>5} {:>8} {:>9} {:>8} {:>10} {:>8} {:>6}",
            "features", "b", "k", "C", "acc(%)", "std(%)", "train(s)", "nSV", "trials"
        );
        for r in &self.cells {
            let (name, b, k) = match r.features {
                FeatureSet::Raw => ("raw", "-".to_string(), "-".to_string()),
                FeatureSet::Hashed { b, k } => ("hashed", b.to_string(), k.to_string()),
            };
            let _ = writeln!(
                out,
                "{:<8} {:>3} {:>5} {:>8} {:>9.3} {:>8.3} {:>10.4} {:>8.1} {:>6}",
                name,
                b,
                k,
                r.c,
                100.0 * r.mean_accuracy,
                100.0 * r.std_accuracy,
                r.mean_train_seconds,
                r.mean_support_vectors,
                r.accuracies.len()
            );
        }
        for &b in &self.bits {
            for &c in &self.cs {
                if let Some(flag) = self.monotone_in_k(b, c) {
                    let _ = writeln!(out, "trend b={b} C={c}: monotone in k = {flag}");
                }
            }
        }
        out
    }

    /// One `key=value` line per cell and per trend flag.
    pub fn records(&self) -> String {
        let mut out = String::new();
        for r in &self.cells {
            let feat = match r.features {
                FeatureSet::Raw => "features=raw".to_string(),
                FeatureSet::Hashed { b, k } => format!("features=hashed b={b} k={k}"),
            };
            let _ = writeln!(
                out,
                "cell {feat} C={} mean_accuracy={:.6} std_accuracy={:.6} mean_train_seconds={:.6} mean_nsv={:.1} trials={}",
                r.c,
                r.mean_accuracy,
                r.std_accuracy,
                r.mean_train_seconds,
                r.mean_support_vectors,
                r.accuracies.len()
            );
        }
        for &b in &self.bits {
            for &c in &self.cs {
                if let Some(flag) = self.monotone_in_k(b, c) {
                    let _ = writeln!(out, "trend b={b} C={c} monotone_in_k={flag}");
                }
            }
        }
        out
    }
}
