//! Resemblance, minwise and b-bit similarity matrices, and a small dense
//! symmetric eigensolver to check that they are positive semidefinite.

use std::fmt;

use crate::dataio::{SketchMatrix, SparseBinarySet};
use crate::error::{Error, Result};
use crate::estimation::overlap;
use crate::expansion::expand_dataset;
use crate::sketching::Permutation;

/// Largest order accepted by the eigensolver.
pub const MAX_ORDER: usize = 500;
const SYMMETRY_TOL: f64 = 1.0 / (1u64 << 40) as f64;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GramKind {
    Resemblance,
    Minwise,
    Bbit,
    ExpandedGram,
}

impl fmt::Display for GramKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GramKind::Resemblance => "resemblance",
            GramKind::Minwise => "minwise",
            GramKind::Bbit => "bbit",
            GramKind::ExpandedGram => "expanded-gram",
        })
    }
}

/// Dense row-major `n x n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    kind: GramKind,
    n: usize,
    entries: Vec<f64>,
}

impl GramMatrix {
    pub fn from_entries(kind: GramKind, n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::invalid(format!(
                "{} entries for an order-{n} matrix",
                entries.len()
            )));
        }
        Ok(GramMatrix { kind, n, entries })
    }

    fn from_fn(kind: GramKind, n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        GramMatrix { kind, n, entries }
    }

    pub fn kind(&self) -> GramKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }
}

fn check_sets(sets: &[SparseBinarySet]) -> Result<()> {
    let Some(first) = sets.first() else {
        return Err(Error::NoSamples);
    };
    if sets
        .iter()
        .any(|s| s.universe_size() != first.universe_size())
    {
        return Err(Error::mismatch("sets live in different universes"));
    }
    Ok(())
}

/// Entry `(i, j)` is the exact resemblance of sets `i` and `j`.
pub fn resemblance_matrix(sets: &[SparseBinarySet]) -> Result<GramMatrix> {
    check_sets(sets)?;
    Ok(GramMatrix::from_fn(
        GramKind::Resemblance,
        sets.len(),
        |i, j| {
            overlap(&sets[i], &sets[j])
                .expect("universes checked")
                .resemblance()
        },
    ))
}

/// Entry `(i, j)` is 1 when sets `i` and `j` share their minimum under `perm`.
pub fn minwise_matrix(sets: &[SparseBinarySet], perm: &Permutation) -> Result<GramMatrix> {
    check_sets(sets)?;
    if sets[0].universe_size() > perm.domain_size() {
        return Err(Error::mismatch(format!(
            "universe {} exceeds the permutation domain {}",
            sets[0].universe_size(),
            perm.domain_size()
        )));
    }
    let z: Vec<u64> = sets.iter().map(|s| perm.min_image(s)).collect();
    Ok(GramMatrix::from_fn(
        GramKind::Minwise,
        sets.len(),
        |i, j| (z[i] == z[j]) as u8 as f64,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BbitSelection {
    /// Indicator matrix of one permutation.
    Single(usize),
    /// Mean of the indicator matrices over all `k` permutations.
    Averaged,
}

/// Integer count of positions where rows `i` and `j` agree.
pub fn matching_positions(sketches: &SketchMatrix, i: usize, j: usize) -> usize {
    sketches
        .row_values(i)
        .zip(sketches.row_values(j))
        .filter(|(a, b)| a == b)
        .count()
}

pub fn bbit_matrix(sketches: &SketchMatrix, selection: BbitSelection) -> Result<GramMatrix> {
    let n = sketches.n();
    if n == 0 {
        return Err(Error::NoSamples);
    }
    match selection {
        BbitSelection::Single(t) => {
            if t >= sketches.k() {
                return Err(Error::invalid(format!(
                    "permutation {t} out of range (k = {})",
                    sketches.k()
                )));
            }
            let col: Vec<u16> = (0..n).map(|i| sketches.value(i, t)).collect();
            Ok(GramMatrix::from_fn(GramKind::Bbit, n, |i, j| {
                (col[i] == col[j]) as u8 as f64
            }))
        }
        BbitSelection::Averaged => {
            let k = sketches.k() as f64;
            Ok(GramMatrix::from_fn(GramKind::Bbit, n, |i, j| {
                matching_positions(sketches, i, j) as f64 / k
            }))
        }
    }
}

/// Gram matrix of the one-hot expanded rows.
pub fn expanded_gram(sketches: &SketchMatrix, normalize: bool) -> Result<GramMatrix> {
    if sketches.n() == 0 {
        return Err(Error::NoSamples);
    }
    let rows = expand_dataset(sketches, normalize);
    let expanded: Vec<_> = (0..sketches.n()).map(|i| rows.row(i)).collect();
    Ok(GramMatrix::from_fn(
        GramKind::ExpandedGram,
        sketches.n(),
        |i, j| expanded[i].dot(&expanded[j]),
    ))
}

/// All eigenvalues of a symmetric row-major matrix, ascending.
///
/// Cyclic Jacobi: sweep every `(p, q)` pair with a rotation that zeroes
/// `a[p][q]`, until the off-diagonal Frobenius norm drops to
/// `1e-12 * ||A||_F`.
pub fn symmetric_eigenvalues(n: usize, entries: &[f64]) -> Result<Vec<f64>> {
    if entries.len() != n * n {
        return Err(Error::invalid(format!(
            "{} entries for an order-{n} matrix",
            entries.len()
        )));
    }
    if n > MAX_ORDER {
        return Err(Error::invalid(format!(
            "order {n} exceeds the supported maximum of {MAX_ORDER}"
        )));
    }
    for i in 0..n {
        for j in i + 1..n {
            let (x, y) = (entries[i * n + j], entries[j * n + i]);
            let diff = (x - y).abs();
            if diff > SYMMETRY_TOL * x.abs().max(y.abs()).max(1.0) {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    diff,
                });
            }
        }
    }

    let mut a = entries.to_vec();
    // symmetrize so rounding noise below the tolerance does not linger
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
    let frobenius = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = OFF_DIAGONAL_TOL * frobenius;

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a, n) <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    Ok(eig)
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[i * n + j] * a[i * n + j];
            }
        }
    }
    acc.sqrt()
}

pub fn min_eigenvalue(matrix: &GramMatrix) -> Result<f64> {
    if matrix.n == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    Ok(symmetric_eigenvalues(matrix.n, &matrix.entries)?[0])
}

/// `-1e-10 * n`, the most negative eigenvalue tolerated for a PSD witness.
pub fn psd_tolerance(n: usize) -> f64 {
    -1e-10 * n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketching::{build_family, FamilyId, FamilyKind};

    fn set(ix: &[u32], d: u64) -> SparseBinarySet {
        SparseBinarySet::new(ix.to_vec(), d).unwrap()
    }

    fn identity(n: usize) -> Vec<f64> {
        (0..n * n).map(|t| (t / n == t % n) as u8 as f64).collect()
    }

    #[test]
    fn closed_form_eigenvalues() {
        assert_eq!(
            symmetric_eigenvalues(4, &identity(4)).unwrap(),
            vec![1.0; 4]
        );
        let ones = vec![1.0; 25];
        let e = symmetric_eigenvalues(5, &ones).unwrap();
        assert!(e[0].abs() < 1e-12);
        assert!((e[4] - 5.0).abs() < 1e-12);
        let e = symmetric_eigenvalues(2, &[1.0, 0.5, 0.5, 1.0]).unwrap();
        assert!((e[0] - 0.5).abs() < 1e-15);
        assert!((e[1] - 1.5).abs() < 1e-15);
        let e = symmetric_eigenvalues(2, &[2.0, 0.0, 0.0, -3.0]).unwrap();
        assert_eq!(e, vec![-3.0, 2.0]);
    }

    #[test]
    fn rejects_asymmetric_and_oversized() {
        assert!(matches!(
            symmetric_eigenvalues(2, &[1.0, 0.5, 0.4, 1.0]),
            Err(Error::NotSymmetric { row: 0, col: 1, .. })
        ));
        assert!(symmetric_eigenvalues(2, &[1.0; 3]).is_err());
        assert!(symmetric_eigenvalues(501, &identity(501)).is_err());
    }

    #[test]
    fn identical_and_disjoint_collections() {
        let same: Vec<_> = (0..4).map(|_| set(&[1, 2, 3], 10)).collect();
        let r = resemblance_matrix(&same).unwrap();
        assert!(r.entries().iter().all(|&x| x == 1.0));
        assert!(min_eigenvalue(&r).unwrap().abs() < 1e-12);

        let disjoint: Vec<_> = (0..4).map(|i| set(&[2 * i, 2 * i + 1], 10)).collect();
        let r = resemblance_matrix(&disjoint).unwrap();
        assert_eq!(r.entries(), &identity(4)[..]);
    }

    #[test]
    fn minwise_matrix_is_a_one_hot_gram() {
        let d = 30;
        let sets = vec![
            set(&[0, 5, 9], d),
            set(&[5, 9, 20], d),
            set(&[29], d),
            set(&[1, 2, 3, 4, 5, 6], d),
        ];
        let fam = build_family(FamilyKind::Exact, 6, d, 2).unwrap();
        for perm in fam.members() {
            let m = minwise_matrix(&sets, perm).unwrap();
            let onehot: Vec<Vec<f64>> = sets
                .iter()
                .map(|s| {
                    let z = perm.min_image(s) as usize;
                    (0..d as usize).map(|t| (t == z) as u8 as f64).collect()
                })
                .collect();
            for i in 0..sets.len() {
                assert_eq!(m.get(i, i), 1.0);
                for j in 0..sets.len() {
                    let g: f64 = onehot[i].iter().zip(&onehot[j]).map(|(a, b)| a * b).sum();
                    assert_eq!(m.get(i, j), g);
                }
            }
        }
    }

    #[test]
    fn bbit_single_and_averaged() {
        let id = FamilyId::new(FamilyKind::Exact, 100, 1).unwrap();
        let mut m = SketchMatrix::new(4, 2, id).unwrap();
        m.push_row(&[1, 2, 3, 0], 5).unwrap();
        m.push_row(&[1, 0, 3, 2], 5).unwrap();
        m.push_row(&[0, 2, 1, 1], 5).unwrap();
        let single = bbit_matrix(&m, BbitSelection::Single(0)).unwrap();
        assert_eq!(single.get(0, 1), 1.0);
        assert_eq!(single.get(0, 2), 0.0);
        let avg = bbit_matrix(&m, BbitSelection::Averaged).unwrap();
        assert_eq!(avg.get(0, 1), 0.5);
        assert_eq!(avg.get(0, 2), 0.25);
        assert_eq!(avg.get(1, 2), 0.0);
        assert!((0..3).all(|i| avg.get(i, i) == 1.0));
        let gram = expanded_gram(&m, true).unwrap();
        for (x, y) in avg.entries().iter().zip(gram.entries()) {
            assert!((x - y).abs() <= 2f64.powi(-40));
        }
        assert!(bbit_matrix(&m, BbitSelection::Single(4)).is_err());
    }
}
