//! Sparse binary datasets: svmlight parsing, binarization, random splits and
//! the packed sketch file format.

mod sketch_file;
mod svmlight;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use sketch_file::{payload_len, SketchMatrix, SKETCH_MAGIC, SKETCH_VERSION};
pub use svmlight::{load_svmlight, parse_svmlight};

/// A sample as a set of feature indices drawn from `{0, .., D-1}`.
///
/// Indices are kept sorted and distinct, and the set is never empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SparseBinarySet {
    indices: Vec<u32>,
    universe_size: u64,
}

impl SparseBinarySet {
    /// Builds a set from arbitrary indices; duplicates collapse.
    pub fn new(mut indices: Vec<u32>, universe_size: u64) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::from_sorted(indices, universe_size)
    }

    /// Builds a set from indices that are already strictly increasing.
    pub fn from_sorted(indices: Vec<u32>, universe_size: u64) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptySet("set has no elements".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("indices must be strictly increasing"));
        }
        let max = *indices.last().unwrap();
        if max as u64 >= universe_size {
            return Err(Error::invalid(format!(
                "index {max} outside universe of size {universe_size}"
            )));
        }
        Ok(SparseBinarySet {
            indices,
            universe_size,
        })
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    /// Cardinality `f = |S|`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn universe_size(&self) -> u64 {
        self.universe_size
    }

    pub fn contains(&self, index: u32) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Same elements viewed in a (possibly larger) universe.
    pub fn with_universe_size(&self, universe_size: u64) -> Result<Self> {
        Self::from_sorted(self.indices.clone(), universe_size)
    }

    /// `|self ∩ other|` by a linear merge of the sorted index lists.
    pub fn intersection_size(&self, other: &SparseBinarySet) -> usize {
        let (a, b) = (&self.indices, &other.indices);
        let (mut i, mut j, mut count) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }

    pub fn is_subset_of(&self, other: &SparseBinarySet) -> bool {
        self.intersection_size(other) == self.len()
    }
}

/// Binary samples with labels in `{-1, +1}` over a shared universe.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<SparseBinarySet>,
    labels: Vec<i8>,
    universe_size: u64,
}

impl LabeledDataset {
    pub fn new(samples: Vec<SparseBinarySet>, labels: Vec<i8>, universe_size: u64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::NoSamples);
        }
        if samples.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            )));
        }
        if let Some(pos) = labels.iter().position(|&y| y != 1 && y != -1) {
            return Err(Error::invalid(format!(
                "label {} of sample {pos} is not -1 or +1",
                labels[pos]
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.universe_size() != universe_size {
                return Err(Error::mismatch(format!(
                    "sample {i} has universe size {} but the dataset uses {universe_size}",
                    s.universe_size()
                )));
            }
        }
        Ok(LabeledDataset {
            samples,
            labels,
            universe_size,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[SparseBinarySet] {
        &self.samples
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn universe_size(&self) -> u64 {
        self.universe_size
    }

    /// Re-homes every sample in a larger universe so that train and test
    /// sets can share one `D`.
    pub fn with_universe_size(&self, universe_size: u64) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|s| s.with_universe_size(universe_size))
            .collect::<Result<Vec<_>>>()?;
        LabeledDataset::new(samples, self.labels.clone(), universe_size)
    }

    /// Samples at the given positions, in that order.
    pub fn subset(&self, positions: &[usize]) -> Result<Self> {
        let samples = positions.iter().map(|&i| self.samples[i].clone()).collect();
        let labels = positions.iter().map(|&i| self.labels[i]).collect();
        LabeledDataset::new(samples, labels, self.universe_size)
    }
}

/// One parsed svmlight row before binarization.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSample {
    /// `(zero-based index, value)` pairs, sorted by index, indices distinct.
    pub features: Vec<(u32, f64)>,
}

/// Real-valued sparse dataset as read from an svmlight file.
#[derive(Clone, Debug, PartialEq)]
pub struct RawDataset {
    pub samples: Vec<RawSample>,
    pub labels: Vec<i8>,
    pub universe_size: u64,
}

impl From<&LabeledDataset> for RawDataset {
    fn from(data: &LabeledDataset) -> Self {
        RawDataset {
            samples: data
                .samples
                .iter()
                .map(|s| RawSample {
                    features: s.indices().iter().map(|&i| (i, 1.0)).collect(),
                })
                .collect(),
            labels: data.labels.clone(),
            universe_size: data.universe_size,
        }
    }
}

/// Quantizes every nonzero value to presence; zero-valued entries are dropped.
pub fn binarize(raw: &RawDataset) -> Result<LabeledDataset> {
    let samples = raw
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let indices: Vec<u32> = s
                .features
                .iter()
                .filter(|(_, v)| *v != 0.0)
                .map(|&(idx, _)| idx)
                .collect();
            if indices.is_empty() {
                return Err(Error::EmptySet(format!(
                    "sample {i} is empty after binarization"
                )));
            }
            SparseBinarySet::new(indices, raw.universe_size)
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(samples, raw.labels.clone(), raw.universe_size)
}

/// Picks `round(test_fraction * n)` test positions uniformly without
/// replacement. Both returned position lists are sorted.
pub fn split_positions(
    n: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if n < 2 {
        return Err(Error::invalid("splitting needs at least 2 samples"));
    }
    let n_test = (test_fraction * n as f64).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(Error::invalid(format!(
            "test fraction {test_fraction} of {n} samples leaves an empty part"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = rand::seq::index::sample(&mut rng, n, n_test).into_vec();
    test.sort_unstable();
    let mut in_test = vec![false; n];
    for &i in &test {
        in_test[i] = true;
    }
    let train = (0..n).filter(|&i| !in_test[i]).collect();
    Ok((train, test))
}

/// Random train/test partition, deterministic given `seed`.
pub fn split(
    data: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train, test) = split_positions(data.len(), test_fraction, seed)?;
    Ok((data.subset(&train)?, data.subset(&test)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ix: &[u32], d: u64) -> SparseBinarySet {
        SparseBinarySet::new(ix.to_vec(), d).unwrap()
    }

    #[test]
    fn set_invariants() {
        assert_eq!(set(&[5, 1, 5, 3], 6).indices(), &[1, 3, 5]);
        assert!(SparseBinarySet::new(vec![], 10).is_err());
        assert!(SparseBinarySet::new(vec![10], 10).is_err());
        assert!(SparseBinarySet::from_sorted(vec![2, 1], 10).is_err());
        assert_eq!(set(&[0, 1, 2], 4).intersection_size(&set(&[1, 2, 3], 4)), 2);
        assert!(set(&[1], 4).is_subset_of(&set(&[0, 1], 4)));
    }

    #[test]
    fn dataset_rejects_bad_labels() {
        let s = vec![set(&[0], 2)];
        assert!(LabeledDataset::new(s.clone(), vec![0], 2).is_err());
        assert!(LabeledDataset::new(s.clone(), vec![1, 1], 2).is_err());
        assert!(matches!(
            LabeledDataset::new(vec![], vec![], 2),
            Err(Error::NoSamples)
        ));
        assert!(LabeledDataset::new(s, vec![-1], 2).is_ok());
    }

    #[test]
    fn binarize_drops_zeros() {
        let raw = RawDataset {
            samples: vec![RawSample {
                features: vec![(3, 0.7), (5, 0.0), (9, 2.0)],
            }],
            labels: vec![1],
            universe_size: 10,
        };
        let d = binarize(&raw).unwrap();
        assert_eq!(d.samples()[0].indices(), &[3, 9]);

        let zero = RawDataset {
            samples: vec![RawSample {
                features: vec![(3, 0.0)],
            }],
            labels: vec![1],
            universe_size: 10,
        };
        assert!(matches!(binarize(&zero), Err(Error::EmptySet(_))));
    }

    #[test]
    fn binarize_is_idempotent() {
        let raw = RawDataset {
            samples: vec![
                RawSample {
                    features: vec![(0, -1.5), (4, 3.0)],
                },
                RawSample {
                    features: vec![(2, 1.0)],
                },
            ],
            labels: vec![1, -1],
            universe_size: 5,
        };
        let once = binarize(&raw).unwrap();
        let twice = binarize(&RawDataset::from(&once)).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let samples: Vec<_> = (0..10).map(|i| set(&[i], 10)).collect();
        let labels = (0..10).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let data = LabeledDataset::new(samples, labels, 10).unwrap();
        let (train, test) = split(&data, 0.2, 7).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        assert_eq!(split(&data, 0.2, 7).unwrap(), (train, test));

        let (tr, te) = split_positions(350_000, 0.2, 1).unwrap();
        assert_eq!(te.len(), 70_000);
        assert_eq!(tr.len(), 280_000);

        assert!(split(&data, 0.0, 1).is_err());
        assert!(split(&data, 1.0, 1).is_err());
        assert!(split(&data, -0.3, 1).is_err());
    }
}
