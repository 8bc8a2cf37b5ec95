//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use bbit_svm::svm::{SparseRows, SparseVector};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// `|S1 ∩ S2|` and `|S1 ∪ S2|` through ordered sets.
pub fn overlap_counts(s1: &[u32], s2: &[u32]) -> (usize, usize) {
    let a: BTreeSet<u32> = s1.iter().copied().collect();
    let b: BTreeSet<u32> = s2.iter().copied().collect();
    (a.intersection(&b).count(), a.union(&b).count())
}

/// Dense rows with roughly half the entries nonzero, and random labels with
/// both classes present.
pub fn random_problem<R: Rng>(rng: &mut R, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<i8>) {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..d)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        rng.random_range(-1.0..1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            // never an all-zero row
            let j = rng.random_range(0..d);
            row[j] = rng.random_range(0.5..1.5);
            row
        })
        .collect();
    let mut labels: Vec<i8> = (0..n)
        .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
        .collect();
    labels[0] = 1;
    if n > 1 {
        labels[1] = -1;
    }
    (rows, labels)
}

pub fn sparse_rows(rows: &[Vec<f64>]) -> SparseRows {
    SparseRows {
        dimension: rows[0].len(),
        rows: rows.iter().map(|r| SparseVector::from_dense(r)).collect(),
    }
}

/// Minimum of `1/2 a'Qa - e'a` over the box `[0, C]^n`, found exactly by
/// enumerating which coordinates sit at 0, at C, or strictly inside, and
/// solving the stationarity system on the free block. Small `n` only.
pub fn dual_oracle(rows: &[Vec<f64>], labels: &[i8], c: f64) -> (Vec<f64>, f64) {
    let n = rows.len();
    assert!(n <= 8, "enumeration is 3^n");
    let x = DMatrix::from_fn(n, rows[0].len(), |i, j| labels[i] as f64 * rows[i][j]);
    let q = &x * x.transpose();
    let objective = |a: &DVector<f64>| 0.5 * (a.transpose() * &q * a)[(0, 0)] - a.sum();

    let mut best: Option<(DVector<f64>, f64)> = None;
    for code in 0..3usize.pow(n as u32) {
        // state per coordinate: 0 -> lower bound, 1 -> upper bound, 2 -> free
        let mut state = vec![0; n];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = rest % 3;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut a = DVector::from_fn(n, |i, _| if state[i] == 1 { c } else { 0.0 });
        if !free.is_empty() {
            // Q_FF a_F = e - Q_FB a_B
            let qff = DMatrix::from_fn(free.len(), free.len(), |r, s| q[(free[r], free[s])]);
            let qa = &q * &a;
            let rhs = DVector::from_fn(free.len(), |r, _| 1.0 - qa[free[r]]);
            let Some(sol) = qff.lu().solve(&rhs) else {
                continue;
            };
            if sol.iter().any(|&v| !(v > 0.0 && v < c)) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                a[i] = sol[r];
            }
        }
        let f = objective(&a);
        if best.as_ref().is_none_or(|(_, g)| f < *g) {
            best = Some((a, f));
        }
    }
    let (a, f) = best.expect("the all-zero vertex is always feasible");
    (a.iter().copied().collect(), f)
}
