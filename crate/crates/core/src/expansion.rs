//! One-hot expansion of b-bit sketches into a `2^b * k` dimensional space
//! where inner products count matching positions.
//!
//! Position `j` holding value `v` lights coordinate `j * 2^b + (2^b - 1 - v)`:
//! within each block of `2^b` coordinates the values are laid out from the
//! highest down to zero.

use crate::dataio::SketchMatrix;
use crate::error::{Error, Result};
use crate::sketching::BBitSketch;
use crate::svm::RowSource;

/// Coordinate lit by value `value` at sketch position `position`.
#[inline]
pub fn expanded_index(position: usize, value: u16, b: u8) -> usize {
    let mask = (1usize << b) - 1;
    (position << b) + (mask - value as usize)
}

pub fn expanded_dimension(k: usize, b: u8) -> usize {
    k << b
}

/// Sparse expanded row: exactly `k` nonzeros, one per block, all equal.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpandedVector {
    dimension: usize,
    indices: Vec<usize>,
    value: f64,
}

impl ExpandedVector {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Nonzero coordinates, strictly increasing.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Common value of every nonzero (1 or `1/sqrt(k)`).
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn squared_norm(&self) -> f64 {
        self.indices.len() as f64 * self.value * self.value
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        for &i in &self.indices {
            out[i] = self.value;
        }
        out
    }

    /// Number of shared nonzero coordinates.
    pub fn shared_support(&self, other: &ExpandedVector) -> usize {
        // one nonzero per block, so block j of both vectors lines up
        self.indices
            .iter()
            .zip(&other.indices)
            .filter(|(a, b)| a == b)
            .count()
    }

    pub fn dot(&self, other: &ExpandedVector) -> f64 {
        self.shared_support(other) as f64 * self.value * other.value
    }
}

fn normalization(k: usize, normalize: bool) -> f64 {
    if normalize {
        1.0 / (k as f64).sqrt()
    } else {
        1.0
    }
}

pub fn expand(row: &BBitSketch, normalize: bool) -> Result<ExpandedVector> {
    let b = row.b();
    if !(1..=16).contains(&b) {
        return Err(Error::invalid(format!("b must lie in [1, 16], got {b}")));
    }
    if let Some(&v) = row.values().iter().find(|&&v| v as u32 >= 1u32 << b) {
        return Err(Error::invalid(format!(
            "value {v} does not fit in {b} bits"
        )));
    }
    Ok(ExpandedVector {
        dimension: expanded_dimension(row.k(), b),
        indices: row
            .values()
            .iter()
            .enumerate()
            .map(|(j, &v)| expanded_index(j, v, b))
            .collect(),
        value: normalization(row.k(), normalize),
    })
}

/// Expanded view over a packed sketch matrix. Rows are produced on demand;
/// nothing beyond the packed payload is stored.
#[derive(Clone, Copy, Debug)]
pub struct ExpandedRows<'a> {
    sketches: &'a SketchMatrix,
    value: f64,
}

pub fn expand_dataset(sketches: &SketchMatrix, normalize: bool) -> ExpandedRows<'_> {
    ExpandedRows {
        sketches,
        value: normalization(sketches.k(), normalize),
    }
}

impl<'a> ExpandedRows<'a> {
    pub fn sketches(&self) -> &'a SketchMatrix {
        self.sketches
    }

    pub fn row(&self, i: usize) -> ExpandedVector {
        let b = self.sketches.b();
        ExpandedVector {
            dimension: expanded_dimension(self.sketches.k(), b),
            indices: self
                .sketches
                .row_values(i)
                .enumerate()
                .map(|(j, v)| expanded_index(j, v, b))
                .collect(),
            value: self.value,
        }
    }
}

impl RowSource for ExpandedRows<'_> {
    fn n_rows(&self) -> usize {
        self.sketches.n()
    }

    fn dimension(&self) -> usize {
        expanded_dimension(self.sketches.k(), self.sketches.b())
    }

    #[inline]
    fn for_each_nonzero<F: FnMut(usize, f64)>(&self, i: usize, mut f: F) {
        let b = self.sketches.b();
        for (j, v) in self.sketches.row_values(i).enumerate() {
            f(expanded_index(j, v, b), self.value);
        }
    }

    fn squared_norm(&self, _i: usize) -> f64 {
        self.sketches.k() as f64 * self.value * self.value
    }
}
