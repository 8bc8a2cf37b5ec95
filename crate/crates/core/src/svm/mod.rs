//! L1-loss linear SVM trained by dual coordinate descent.
//!
//! Solves `min_w 1/2 w'w + C sum_i max(1 - y_i w'x_i, 0)` through its dual
//! `min_a 1/2 a'Qa - e'a` s.t. `0 <= a_i <= C`, `Q_ij = y_i y_j x_i'x_j`,
//! keeping `w = sum_i y_i a_i x_i` up to date after every coordinate step.
//! There is no bias term; append a constant feature if one is needed.

mod model;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataio::SparseBinarySet;
use crate::error::{Error, Result};

pub use model::{evaluate, Evaluation, FeatureSpace, Prediction, SvmModel, MODEL_MAGIC};

/// Read access to a collection of sparse rows.
///
/// Training only ever touches rows through this trait, so row storage can be
/// anything from explicit sparse vectors to sketches expanded on the fly.
pub trait RowSource {
    fn n_rows(&self) -> usize;

    fn dimension(&self) -> usize;

    /// Calls `f(index, value)` for every stored nonzero of row `i`.
    fn for_each_nonzero<F: FnMut(usize, f64)>(&self, i: usize, f: F);

    /// `w'x_i`; coordinates past the end of `w` count as zero.
    fn dot(&self, i: usize, w: &[f64]) -> f64 {
        let mut acc = 0.0;
        self.for_each_nonzero(i, |j, v| {
            if let Some(wj) = w.get(j) {
                acc += wj * v;
            }
        });
        acc
    }

    /// `w += scale * x_i`.
    fn add_scaled(&self, i: usize, scale: f64, w: &mut [f64]) {
        self.for_each_nonzero(i, |j, v| w[j] += scale * v);
    }

    fn squared_norm(&self, i: usize) -> f64 {
        let mut acc = 0.0;
        self.for_each_nonzero(i, |_, v| acc += v * v);
        acc
    }
}

/// Binary sets used directly as feature vectors, optionally scaled to unit
/// norm (`1/sqrt(f)` per element).
#[derive(Clone, Copy, Debug)]
pub struct BinaryRows<'a> {
    sets: &'a [SparseBinarySet],
    dimension: usize,
    normalize: bool,
}

impl<'a> BinaryRows<'a> {
    pub fn new(sets: &'a [SparseBinarySet], dimension: usize, normalize: bool) -> Self {
        BinaryRows {
            sets,
            dimension,
            normalize,
        }
    }

    fn value(&self, i: usize) -> f64 {
        if self.normalize {
            1.0 / (self.sets[i].len() as f64).sqrt()
        } else {
            1.0
        }
    }
}

impl RowSource for BinaryRows<'_> {
    fn n_rows(&self) -> usize {
        self.sets.len()
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    #[inline]
    fn for_each_nonzero<F: FnMut(usize, f64)>(&self, i: usize, mut f: F) {
        let v = self.value(i);
        for &j in self.sets[i].indices() {
            f(j as usize, v);
        }
    }

    fn squared_norm(&self, i: usize) -> f64 {
        let v = self.value(i);
        self.sets[i].len() as f64 * v * v
    }
}

/// Real-valued sparse vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(indices.len(), values.len());
        SparseVector { indices, values }
    }

    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .unzip();
        SparseVector { indices, values }
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .filter_map(|(&j, v)| w.get(j).map(|wj| wj * v))
            .sum()
    }
}

/// Explicit sparse rows with a declared dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRows {
    pub rows: Vec<SparseVector>,
    pub dimension: usize,
}

impl RowSource for SparseRows {
    fn n_rows(&self) -> usize {
        self.rows.len()
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn for_each_nonzero<F: FnMut(usize, f64)>(&self, i: usize, mut f: F) {
        let r = &self.rows[i];
        for (&j, &v) in r.indices.iter().zip(&r.values) {
            f(j, v);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainParams {
    pub c: f64,
    /// Stop once the largest `|PG|` seen during an epoch falls below this.
    pub tolerance: f64,
    pub max_epochs: usize,
    /// Seeds the per-epoch coordinate shuffle.
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            c: 1.0,
            tolerance: 0.1,
            max_epochs: 1000,
            seed: 0,
        }
    }
}

/// Dual variables with the cached diagonal and the primal weights they imply.
#[derive(Clone, Debug, PartialEq)]
pub struct DualState {
    pub alpha: Vec<f64>,
    pub q_diag: Vec<f64>,
    pub w: Vec<f64>,
}

/// `1/2 ||w||^2 - sum(alpha)`, equal to `1/2 a'Qa - e'a` while
/// `w = sum_i y_i a_i x_i`.
pub fn dual_objective(state: &DualState) -> f64 {
    0.5 * squared(&state.w) - state.alpha.iter().sum::<f64>()
}

/// `1/2 ||w||^2 + C * sum_i max(1 - y_i w'x_i, 0)`.
pub fn primal_objective<R: RowSource>(w: &[f64], rows: &R, labels: &[i8], c: f64) -> f64 {
    let hinge: f64 = (0..rows.n_rows())
        .map(|i| (1.0 - labels[i] as f64 * rows.dot(i, w)).max(0.0))
        .sum();
    0.5 * squared(w) + c * hinge
}

/// Recomputes `sum_i y_i alpha_i x_i` from scratch.
pub fn weights_from_dual<R: RowSource>(rows: &R, labels: &[i8], alpha: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; rows.dimension()];
    for (i, &a) in alpha.iter().enumerate() {
        if a != 0.0 {
            rows.add_scaled(i, a * labels[i] as f64, &mut w);
        }
    }
    w
}

fn squared(w: &[f64]) -> f64 {
    w.iter().map(|x| x * x).sum()
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub model: SvmModel,
    pub state: DualState,
    /// Dual objective before the first epoch and after each epoch.
    pub dual_trace: Vec<f64>,
    /// Largest `|PG|` of the last epoch.
    pub final_max_pg: f64,
    pub converged: bool,
}

fn check_problem<R: RowSource>(rows: &R, labels: &[i8], params: &TrainParams) -> Result<()> {
    if rows.n_rows() == 0 {
        return Err(Error::NoSamples);
    }
    if rows.n_rows() != labels.len() {
        return Err(Error::mismatch(format!(
            "{} rows but {} labels",
            rows.n_rows(),
            labels.len()
        )));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::invalid("labels must be -1 or +1"));
    }
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::invalid(format!(
            "C must be positive, got {}",
            params.c
        )));
    }
    if params.tolerance.is_nan() || params.tolerance <= 0.0 {
        return Err(Error::invalid(format!(
            "tolerance must be positive, got {}",
            params.tolerance
        )));
    }
    if params.max_epochs == 0 {
        return Err(Error::invalid("max_epochs must be at least 1"));
    }
    Ok(())
}

/// Dual coordinate descent from `alpha = 0, w = 0`.
///
/// Each epoch visits every coordinate once in a freshly shuffled order. For
/// coordinate `i`: `G = y_i w'x_i - 1`; the projected gradient is
/// `min(G, 0)` at `alpha_i = 0`, `max(G, 0)` at `alpha_i = C`, `G` otherwise;
/// when it is nonzero, `alpha_i <- clip(alpha_i - G/Q_ii, 0, C)` and `w`
/// moves by `(alpha_i - old) y_i x_i`.
pub fn train<R: RowSource>(rows: &R, labels: &[i8], params: &TrainParams) -> Result<TrainOutput> {
    check_problem(rows, labels, params)?;
    let n = rows.n_rows();
    let c = params.c;

    let q_diag: Vec<f64> = (0..n).map(|i| rows.squared_norm(i)).collect();
    if let Some(i) = q_diag.iter().position(|&q| q <= 0.0) {
        return Err(Error::EmptySet(format!("row {i} has no nonzero entries")));
    }
    let mut state = DualState {
        alpha: vec![0.0; n],
        q_diag,
        w: vec![0.0; rows.dimension()],
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut dual_trace = vec![0.0];
    let mut converged = false;
    let mut epochs_run = 0;
    let mut max_pg = f64::INFINITY;

    for epoch in 1..=params.max_epochs {
        order.shuffle(&mut rng);
        max_pg = 0.0f64;
        for &i in &order {
            let y = labels[i] as f64;
            let g = y * rows.dot(i, &state.w) - 1.0;
            let alpha_i = state.alpha[i];
            let pg = if alpha_i == 0.0 {
                g.min(0.0)
            } else if alpha_i == c {
                g.max(0.0)
            } else {
                g
            };
            max_pg = max_pg.max(pg.abs());
            if pg != 0.0 {
                let updated = (alpha_i - g / state.q_diag[i]).max(0.0).min(c);
                state.alpha[i] = updated;
                let step = (updated - alpha_i) * y;
                if step != 0.0 {
                    rows.add_scaled(i, step, &mut state.w);
                }
            }
        }
        epochs_run = epoch;
        dual_trace.push(dual_objective(&state));
        if max_pg < params.tolerance {
            converged = true;
            break;
        }
    }

    let dual = *dual_trace.last().unwrap();
    let primal = primal_objective(&state.w, rows, labels, c);
    let model = SvmModel {
        weights: state.w.clone(),
        c,
        tolerance: params.tolerance,
        seed: params.seed,
        epochs_run,
        duality_gap: primal + dual,
        n_support: state.alpha.iter().filter(|&&a| a > 0.0).count(),
        features: FeatureSpace::Unspecified,
    };
    Ok(TrainOutput {
        model,
        state,
        dual_trace,
        final_max_pg: max_pg,
        converged,
    })
}
