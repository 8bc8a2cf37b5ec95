mod common;

use bbit_svm::svm::{
    dual_objective, primal_objective, train, weights_from_dual, RowSource, TrainParams,
};
use common::{dual_oracle, random_problem, sparse_rows};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tight(c: f64, seed: u64) -> TrainParams {
    TrainParams {
        c,
        tolerance: 1e-9,
        max_epochs: 200_000,
        seed,
    }
}

#[test]
fn matches_enumeration_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for case in 0..40 {
        let n = rng.random_range(1..=6);
        let d = rng.random_range(n..n + 4);
        let c = [0.05, 0.5, 2.0, 50.0][case % 4];
        let (dense, labels) = random_problem(&mut rng, n, d);
        let labels = &labels[..n];
        let rows = sparse_rows(&dense);
        let out = train(&rows, labels, &tight(c, case as u64)).unwrap();
        let (alpha, best) = dual_oracle(&dense, labels, c);
        let dual = dual_objective(&out.state);
        assert!((dual - best).abs() < 1e-7, "case {case}: {dual} vs {best}");
        for (a, b) in out.state.alpha.iter().zip(&alpha) {
            assert!((a - b).abs() < 1e-4, "case {case}: alpha {a} vs {b}");
        }
        // strong duality at the optimum
        let primal = primal_objective(&out.state.w, &rows, labels, c);
        assert!(
            (primal + dual).abs() < 1e-6,
            "case {case}: gap {}",
            primal + dual
        );
    }
}

#[test]
fn invariants_hold_on_larger_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..10 {
        let (dense, labels) = random_problem(&mut rng, 60, 20);
        let rows = sparse_rows(&dense);
        let c = 0.3 + case as f64;
        let params = TrainParams {
            c,
            tolerance: 1e-4,
            max_epochs: 5000,
            seed: case,
        };
        let out = train(&rows, &labels, &params).unwrap();
        assert!(out.converged);

        // box constraints
        assert!(out.state.alpha.iter().all(|&a| (0.0..=c).contains(&a)));

        // incremental w equals the weights recomputed from alpha
        let w = weights_from_dual(&rows, &labels, &out.state.alpha);
        for (a, b) in w.iter().zip(&out.state.w) {
            assert!((a - b).abs() < 1e-9);
        }

        // every coordinate step can only lower the dual
        for pair in out.dual_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12 * (1.0 + pair[0].abs()));
        }

        // approximate KKT: gradient sign matches the bound each alpha sits on
        for (i, &y) in labels.iter().enumerate() {
            let g = y as f64 * rows.dot(i, &out.state.w) - 1.0;
            let a = out.state.alpha[i];
            let pg = if a == 0.0 {
                g.min(0.0)
            } else if a == c {
                g.max(0.0)
            } else {
                g
            };
            assert!(pg.abs() < 1e-3, "case {case} row {i}: pg {pg}");
        }
    }
}

#[test]
fn training_is_deterministic_per_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (dense, labels) = random_problem(&mut rng, 40, 10);
    let rows = sparse_rows(&dense);
    let params = TrainParams {
        c: 1.0,
        tolerance: 0.01,
        max_epochs: 1000,
        seed: 3,
    };
    let a = train(&rows, &labels, &params).unwrap();
    let b = train(&rows, &labels, &params).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.dual_trace, b.dual_trace);
}
