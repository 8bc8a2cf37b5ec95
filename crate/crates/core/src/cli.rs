//! Command line front end. Every command writes line-oriented `key=value`
//! output to the supplied writer; the `bbit` binary is a thin wrapper.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use crate::dataio::{load_svmlight, LabeledDataset, SketchMatrix, SparseBinarySet, SKETCH_MAGIC};
use crate::error::{Error, Result};
use crate::estimation::{
    estimate_resemblance_bbit, estimate_resemblance_minwise, minwise_estimator_variance, overlap,
    BbitCorrection,
};
use crate::expansion::{expand_dataset, expanded_dimension};
use crate::experiment::{run_experiment, ExperimentConfig};
use crate::kernelcheck::{
    bbit_matrix, expanded_gram, min_eigenvalue, minwise_matrix, psd_tolerance, resemblance_matrix,
    BbitSelection, GramMatrix, MAX_ORDER,
};
use crate::sketching::{build_family, minhash, sketch_dataset, truncate, FamilyId, FamilyKind};
use crate::svm::{evaluate, train, BinaryRows, FeatureSpace, SvmModel, TrainParams};
use crate::synth::{planted_dataset, SyntheticConfig};

#[derive(Debug, Parser)]
#[command(
    name = "bbit",
    version,
    about = "b-bit minwise hashing and linear SVM toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sketch an svmlight file into a packed sketch file.
    Sketch(SketchArgs),
    /// Train a linear SVM on a sketch file or on raw svmlight features.
    Train(TrainArgs),
    /// Apply a model to a sketch file or an svmlight file.
    Predict(PredictArgs),
    /// Compare exact and estimated resemblance of two sets.
    Estimate(EstimateArgs),
    /// Smallest eigenvalue of a similarity matrix over a set collection.
    KernelCheck(KernelCheckArgs),
    /// Accuracy grid over b, k and C with repeated random splits.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    Exact,
    Affine,
}

impl From<FamilyArg> for FamilyKind {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Exact => FamilyKind::Exact,
            FamilyArg::Affine => FamilyKind::Affine,
        }
    }
}

#[derive(Debug, Args)]
pub struct HashArgs {
    /// Number of permutations.
    #[arg(long, default_value_t = 200)]
    pub k: usize,
    /// Bits kept per minimum.
    #[arg(long, default_value_t = 8)]
    pub b: u8,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = FamilyArg::Exact)]
    pub family: FamilyArg,
    /// Universe size D; defaults to the largest index seen plus one.
    #[arg(long)]
    pub universe_size: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(
        long = "C",
        visible_alias = "c",
        default_value_t = 1.0,
        allow_negative_numbers = true
    )]
    pub c: f64,
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_epochs: usize,
    /// Scale every row to unit length.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct SketchArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub hash: HashArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Sketch file, or svmlight file for a raw-feature model.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Seeds the coordinate order.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Universe size for raw svmlight input.
    #[arg(long)]
    pub universe_size: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Sketch file or svmlight file.
    #[arg(long)]
    pub input: PathBuf,
    /// Only print the summary lines.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// svmlight file holding the two samples.
    #[arg(long, requires = "ids", conflicts_with_all = ["set1", "set2"])]
    pub input: Option<PathBuf>,
    /// Zero-based sample positions, e.g. `3,17`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub ids: Vec<usize>,
    /// Zero-based element ids of the first set, e.g. `0,1,2`.
    #[arg(long, value_delimiter = ',', requires = "set2")]
    pub set1: Vec<u32>,
    #[arg(long, value_delimiter = ',', requires = "set1")]
    pub set2: Vec<u32>,
    #[command(flatten)]
    pub hash: HashArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    Resemblance,
    Minwise,
    Bbit,
    Expanded,
}

#[derive(Debug, Args)]
pub struct KernelCheckArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = KernelArg::Resemblance)]
    pub kind: KernelArg,
    /// Use at most this many samples from the start of the file.
    #[arg(long, default_value_t = MAX_ORDER)]
    pub limit: usize,
    /// Single permutation index; the b-bit matrix is averaged over all k
    /// when absent.
    #[arg(long)]
    pub position: Option<usize>,
    #[command(flatten)]
    pub hash: HashArgs,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// svmlight file; omit together with `--synthetic` for planted data.
    #[arg(long, required_unless_present = "synthetic")]
    pub input: Option<PathBuf>,
    /// Generate the default planted dataset (seeded by `--seed`).
    #[arg(long, conflicts_with = "input")]
    pub synthetic: bool,
    #[arg(long, value_delimiter = ',', default_values_t = [1u8, 2, 4, 8, 16])]
    pub b: Vec<u8>,
    #[arg(long, value_delimiter = ',', default_values_t = [30usize, 50, 100, 150, 200, 300, 400, 500])]
    pub k: Vec<usize>,
    #[arg(long = "C", visible_alias = "c", value_delimiter = ',', default_values_t = [0.01, 0.1, 1.0, 10.0])]
    pub c: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    /// Master seed for splits, families and solver order.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = FamilyArg::Exact)]
    pub family: FamilyArg,
    #[arg(long)]
    pub universe_size: Option<u64>,
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub normalize: bool,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Skip the raw-feature baseline.
    #[arg(long)]
    pub no_raw: bool,
}

/// Runs one parsed command.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Sketch(a) => cmd_sketch(&a, out),
        Command::Train(a) => cmd_train(&a, out),
        Command::Predict(a) => cmd_predict(&a, out),
        Command::Estimate(a) => cmd_estimate(&a, out),
        Command::KernelCheck(a) => cmd_kernel_check(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::from(e).in_file(display(path)))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::from(e).in_file(display(path)))
}

fn read_svmlight(path: &Path, universe_size: Option<u64>) -> Result<LabeledDataset> {
    load_svmlight(open(path)?, universe_size).map_err(|e| e.in_file(display(path)))
}

fn read_sketches(path: &Path) -> Result<SketchMatrix> {
    SketchMatrix::read_from(open(path)?).map_err(|e| e.in_file(display(path)))
}

fn is_sketch_file(path: &Path) -> Result<bool> {
    let mut head = Vec::with_capacity(8);
    open(path)?
        .take(8)
        .read_to_end(&mut head)
        .map_err(|e| Error::from(e).in_file(display(path)))?;
    Ok(head == SKETCH_MAGIC)
}

fn cmd_sketch(a: &SketchArgs, out: &mut dyn Write) -> Result<()> {
    let data = read_svmlight(&a.input, a.hash.universe_size)?;
    let start = Instant::now();
    let sketches = sketch_dataset(&data, a.hash.k, a.hash.b, a.hash.family.into(), a.hash.seed)?;
    let seconds = start.elapsed().as_secs_f64();
    let mut w = create(&a.output)?;
    sketches
        .write_to(&mut w)
        .map_err(|e| e.in_file(display(&a.output)))?;
    writeln!(out, "n={}", sketches.n())?;
    writeln!(out, "k={}", sketches.k())?;
    writeln!(out, "b={}", sketches.b())?;
    writeln!(out, "family={}", sketches.family().kind)?;
    writeln!(out, "seed={}", sketches.family().seed)?;
    writeln!(out, "universe_size={}", sketches.family().universe_size)?;
    writeln!(out, "payload_bytes={}", sketches.payload().len())?;
    writeln!(out, "sketch_seconds={seconds:.6}")?;
    Ok(())
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let params = TrainParams {
        c: a.solver.c,
        tolerance: a.solver.tol,
        max_epochs: a.solver.max_epochs,
        seed: a.seed,
    };
    let normalize = a.solver.normalize;
    let (result, labels_len, train_accuracy, seconds) = if is_sketch_file(&a.input)? {
        let sketches = read_sketches(&a.input)?;
        let labels = sketches
            .labels()
            .ok_or_else(|| {
                Error::format("sketch file carries no labels").in_file(display(&a.input))
            })?
            .to_vec();
        let rows = expand_dataset(&sketches, normalize);
        let start = Instant::now();
        let mut result = train(&rows, &labels, &params)?;
        let seconds = start.elapsed().as_secs_f64();
        result.model.features = FeatureSpace::Sketch {
            k: sketches.k(),
            b: sketches.b(),
            family: sketches.family(),
            normalize,
        };
        let acc = evaluate(&result.model, &rows, &labels)?.accuracy;
        (result, labels.len(), acc, seconds)
    } else {
        let data = read_svmlight(&a.input, a.universe_size)?;
        let d = data.universe_size();
        let rows = BinaryRows::new(data.samples(), d as usize, normalize);
        let start = Instant::now();
        let mut result = train(&rows, data.labels(), &params)?;
        let seconds = start.elapsed().as_secs_f64();
        result.model.features = FeatureSpace::Raw {
            universe_size: d,
            normalize,
        };
        let acc = evaluate(&result.model, &rows, data.labels())?.accuracy;
        (result, data.len(), acc, seconds)
    };

    let model = &result.model;
    let mut w = create(&a.output)?;
    model
        .write_to(&mut w)
        .map_err(|e| e.in_file(display(&a.output)))?;
    let features = match model.features {
        FeatureSpace::Sketch { .. } => "sketch",
        _ => "raw",
    };
    writeln!(out, "features={features}")?;
    writeln!(out, "n={labels_len}")?;
    writeln!(out, "dimension={}", model.dimension())?;
    writeln!(out, "epochs={}", model.epochs_run)?;
    writeln!(out, "converged={}", result.converged)?;
    writeln!(
        out,
        "dual_objective={:.9}",
        result.dual_trace.last().unwrap()
    )?;
    writeln!(out, "duality_gap={:.9}", model.duality_gap)?;
    writeln!(out, "n_sv={}", model.n_support)?;
    writeln!(out, "train_accuracy={train_accuracy:.6}")?;
    writeln!(out, "train_seconds={seconds:.6}")?;
    Ok(())
}

fn check_sketch_family(model: &SvmModel, sketches: &SketchMatrix) -> Result<()> {
    match model.features {
        FeatureSpace::Sketch { k, b, family, .. } => {
            if family != sketches.family() {
                return Err(Error::mismatch(format!(
                    "model family ({} seed={} D={}) differs from test sketches ({} seed={} D={})",
                    family.kind,
                    family.seed,
                    family.universe_size,
                    sketches.family().kind,
                    sketches.family().seed,
                    sketches.family().universe_size
                )));
            }
            if k != sketches.k() || b != sketches.b() {
                return Err(Error::mismatch(format!(
                    "model expects k={k} b={b}, test sketches have k={} b={}",
                    sketches.k(),
                    sketches.b()
                )));
            }
            Ok(())
        }
        _ => Err(Error::mismatch(
            "a raw-feature model cannot score a sketch file",
        )),
    }
}

fn cmd_predict(a: &PredictArgs, out: &mut dyn Write) -> Result<()> {
    let load_start = Instant::now();
    let model = SvmModel::read_from(open(&a.model)?).map_err(|e| e.in_file(display(&a.model)))?;

    enum Test {
        Sketch(SketchMatrix),
        Raw(LabeledDataset),
    }
    let test = if is_sketch_file(&a.input)? {
        let sketches = read_sketches(&a.input)?;
        check_sketch_family(&model, &sketches)?;
        Test::Sketch(sketches)
    } else {
        match model.features {
            FeatureSpace::Sketch { k, b, family, .. } => {
                let data = read_svmlight(&a.input, Some(family.universe_size))?;
                Test::Sketch(sketch_dataset(&data, k, b, family.kind, family.seed)?)
            }
            FeatureSpace::Raw { universe_size, .. } => {
                Test::Raw(read_svmlight(&a.input, Some(universe_size))?)
            }
            FeatureSpace::Unspecified => {
                return Err(Error::format("model does not record its feature space")
                    .in_file(display(&a.model)))
            }
        }
    };
    let load_seconds = load_start.elapsed().as_secs_f64();

    let compute_start = Instant::now();
    let (labels, predictions) = match &test {
        Test::Sketch(sk) => {
            let normalize = matches!(
                model.features,
                FeatureSpace::Sketch {
                    normalize: true,
                    ..
                }
            );
            debug_assert_eq!(expanded_dimension(sk.k(), sk.b()), model.dimension());
            let rows = expand_dataset(sk, normalize);
            let preds: Vec<_> = (0..sk.n()).map(|i| model.predict_row(&rows, i)).collect();
            (sk.labels().map(<[i8]>::to_vec), preds)
        }
        Test::Raw(data) => {
            let normalize = matches!(
                model.features,
                FeatureSpace::Raw {
                    normalize: true,
                    ..
                }
            );
            let rows = BinaryRows::new(data.samples(), model.dimension(), normalize);
            let preds: Vec<_> = (0..data.len())
                .map(|i| model.predict_row(&rows, i))
                .collect();
            (Some(data.labels().to_vec()), preds)
        }
    };
    let compute_seconds = compute_start.elapsed().as_secs_f64();

    if !a.quiet {
        for (i, p) in predictions.iter().enumerate() {
            match &labels {
                Some(y) => writeln!(
                    out,
                    "sample={i} label={} predicted={} decision={:.9}",
                    y[i], p.label, p.decision
                )?,
                None => writeln!(
                    out,
                    "sample={i} predicted={} decision={:.9}",
                    p.label, p.decision
                )?,
            }
        }
    }
    writeln!(out, "n={}", predictions.len())?;
    if let Some(y) = &labels {
        let correct = predictions
            .iter()
            .zip(y)
            .filter(|(p, &y)| p.label == y)
            .count();
        writeln!(out, "correct={correct}")?;
        writeln!(out, "accuracy={:.6}", correct as f64 / y.len() as f64)?;
    }
    writeln!(out, "load_seconds={load_seconds:.6}")?;
    writeln!(out, "compute_seconds={compute_seconds:.6}")?;
    Ok(())
}

fn cmd_estimate(a: &EstimateArgs, out: &mut dyn Write) -> Result<()> {
    let (s1, s2) = match &a.input {
        Some(path) => {
            let data = read_svmlight(path, a.hash.universe_size)?;
            let pick = |i: usize| {
                data.samples().get(i).cloned().ok_or_else(|| {
                    Error::invalid(format!("sample {i} out of range ({} samples)", data.len()))
                })
            };
            (pick(a.ids[0])?, pick(a.ids[1])?)
        }
        None => {
            if a.set1.is_empty() {
                return Err(Error::invalid(
                    "give --input with --ids, or --set1 and --set2",
                ));
            }
            let max = a.set1.iter().chain(&a.set2).max().copied().unwrap_or(0) as u64;
            let d = a.hash.universe_size.unwrap_or(max + 1);
            (
                SparseBinarySet::new(a.set1.clone(), d)?,
                SparseBinarySet::new(a.set2.clone(), d)?,
            )
        }
    };
    let d = s1.universe_size();
    let (k, b) = (a.hash.k, a.hash.b);
    let ov = overlap(&s1, &s2)?;
    let r = ov.resemblance();
    let (f1, f2) = (s1.len() as u64, s2.len() as u64);

    let family = build_family(a.hash.family.into(), k, d, a.hash.seed)?;
    let m1 = minhash(&s1, &family)?;
    let m2 = minhash(&s2, &family)?;
    let r_minwise = estimate_resemblance_minwise(&m1, &m2)?;
    let band_minwise = 3.0 * minwise_estimator_variance(r, k).sqrt();

    let corr = BbitCorrection::new(f1, f2, d, b)?;
    let p_theory = corr.collision_probability(r);
    let band_p = 3.0 * (p_theory * (1.0 - p_theory) / k as f64).sqrt();
    let est = estimate_resemblance_bbit(&truncate(&m1, b)?, &truncate(&m2, b)?, f1, f2, d)?;
    let band_bbit = band_p / (1.0 - corr.c2);

    writeln!(out, "f1={f1}")?;
    writeln!(out, "f2={f2}")?;
    writeln!(out, "intersection={}", ov.intersection)?;
    writeln!(out, "universe_size={d}")?;
    writeln!(out, "k={k}")?;
    writeln!(out, "b={b}")?;
    writeln!(out, "R_exact={r:.9}")?;
    writeln!(out, "R_minwise={r_minwise:.9} band={band_minwise:.9}")?;
    writeln!(out, "P_b_theory={p_theory:.9}")?;
    writeln!(
        out,
        "P_b_empirical={:.9} band={band_p:.9}",
        est.match_fraction
    )?;
    writeln!(
        out,
        "R_bbit={:.9} clamped={:.9} band={band_bbit:.9}",
        est.resemblance,
        est.clamped()
    )?;
    Ok(())
}

fn cmd_kernel_check(a: &KernelCheckArgs, out: &mut dyn Write) -> Result<()> {
    if a.limit == 0 || a.limit > MAX_ORDER {
        return Err(Error::invalid(format!(
            "--limit must lie in [1, {MAX_ORDER}], got {}",
            a.limit
        )));
    }
    let sketch_input = is_sketch_file(&a.input)?;
    let gram: GramMatrix = if sketch_input {
        let sk = read_sketches(&a.input)?;
        let positions: Vec<usize> = (0..sk.n().min(a.limit)).collect();
        let sk = sk.select_rows(&positions);
        match a.kind {
            KernelArg::Bbit => bbit_matrix(&sk, selection(a.position))?,
            KernelArg::Expanded => expanded_gram(&sk, a.normalize)?,
            _ => {
                return Err(Error::invalid(
                    "resemblance and minwise matrices need the original sets (svmlight input)",
                ))
            }
        }
    } else {
        let data = read_svmlight(&a.input, a.hash.universe_size)?;
        let sets = &data.samples()[..data.len().min(a.limit)];
        let kind: FamilyKind = a.hash.family.into();
        match a.kind {
            KernelArg::Resemblance => resemblance_matrix(sets)?,
            KernelArg::Minwise => {
                let id = FamilyId::new(kind, data.universe_size(), a.hash.seed)?;
                minwise_matrix(sets, &id.member(a.position.unwrap_or(0)))?
            }
            KernelArg::Bbit | KernelArg::Expanded => {
                let subset = LabeledDataset::new(
                    sets.to_vec(),
                    data.labels()[..sets.len()].to_vec(),
                    data.universe_size(),
                )?;
                let sk = sketch_dataset(&subset, a.hash.k, a.hash.b, kind, a.hash.seed)?;
                if matches!(a.kind, KernelArg::Bbit) {
                    bbit_matrix(&sk, selection(a.position))?
                } else {
                    expanded_gram(&sk, a.normalize)?
                }
            }
        }
    };
    let min = min_eigenvalue(&gram)?;
    let tol = psd_tolerance(gram.order());
    writeln!(out, "kind={}", gram.kind())?;
    writeln!(out, "order={}", gram.order())?;
    writeln!(out, "min_eigenvalue={min:.12e}")?;
    writeln!(out, "psd_tolerance={tol:.3e}")?;
    writeln!(out, "psd={}", min >= tol)?;
    Ok(())
}

fn selection(position: Option<usize>) -> BbitSelection {
    position.map_or(BbitSelection::Averaged, BbitSelection::Single)
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let data = match &a.input {
        Some(path) => read_svmlight(path, a.universe_size)?,
        None => {
            let mut cfg = SyntheticConfig {
                seed: a.seed,
                ..SyntheticConfig::default()
            };
            if let Some(d) = a.universe_size {
                cfg.universe_size = d;
            }
            planted_dataset(&cfg)?.data
        }
    };
    let cfg = ExperimentConfig {
        bits: a.b.clone(),
        ks: a.k.clone(),
        cs: a.c.clone(),
        trials: a.trials,
        master_seed: a.seed,
        test_fraction: a.test_fraction,
        family: a.family.into(),
        normalize: a.normalize,
        tolerance: a.tol,
        max_epochs: a.max_epochs,
        include_raw: !a.no_raw,
    };
    let report = run_experiment(&data, &cfg)?;
    writeln!(
        out,
        "n={} universe_size={}",
        data.len(),
        data.universe_size()
    )?;
    out.write_all(report.table().as_bytes())?;
    out.write_all(report.records().as_bytes())?;
    Ok(())
}
