//! Planted synthetic binary classification data.
//!
//! Each class owns a handful of prototype feature sets drawn from disjoint
//! parts of the universe. A sample copies part of one prototype of its class,
//! a smaller part of a prototype of the other class, and fills the rest with
//! uniformly random features. Weighting prototype features +1 (positive
//! class) and -1 (negative class) separates the clean labels with margin
//! `own - cross`; a fraction of labels is then flipped.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataio::{LabeledDataset, SparseBinarySet};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub n: usize,
    pub universe_size: u64,
    /// Target nonzeros per sample (also the prototype size).
    pub nnz: usize,
    pub prototypes_per_class: usize,
    /// Features copied from the sample's own prototype.
    pub own: usize,
    /// Features copied from a prototype of the other class.
    pub cross: usize,
    /// Probability that an observed label is flipped.
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n: 2000,
            universe_size: 1 << 20,
            nnz: 100,
            prototypes_per_class: 20,
            own: 50,
            cross: 10,
            label_noise: 0.05,
            seed: 0,
        }
    }
}

/// Generated data plus the clean labels before noise.
#[derive(Clone, Debug)]
pub struct PlantedData {
    pub data: LabeledDataset,
    pub clean_labels: Vec<i8>,
    /// `prototype_features[c]` holds every prototype feature of class `c`
    /// (0 for +1, 1 for -1).
    pub prototype_features: [Vec<u32>; 2],
}

impl PlantedData {
    /// Score under the planted separator: +1 per positive-prototype feature,
    /// -1 per negative-prototype feature.
    pub fn planted_score(&self, set: &SparseBinarySet) -> i64 {
        let count = |pool: &[u32]| {
            set.indices()
                .iter()
                .filter(|x| pool.binary_search(x).is_ok())
                .count() as i64
        };
        count(&self.prototype_features[0]) - count(&self.prototype_features[1])
    }
}

pub fn planted_dataset(cfg: &SyntheticConfig) -> Result<PlantedData> {
    if cfg.n == 0 {
        return Err(Error::NoSamples);
    }
    if cfg.own + cfg.cross > cfg.nnz || cfg.own <= cfg.cross {
        return Err(Error::invalid(
            "need cross < own and own + cross <= nnz for a separable plant",
        ));
    }
    if cfg.prototypes_per_class == 0 {
        return Err(Error::invalid("need at least one prototype per class"));
    }
    if !(0.0..0.5).contains(&cfg.label_noise) {
        return Err(Error::invalid("label noise must lie in [0, 0.5)"));
    }
    let d = cfg.universe_size;
    let pool_len = 2 * cfg.prototypes_per_class * cfg.nnz;
    if d > u32::MAX as u64 + 1 || (pool_len as u64) * 2 > d {
        return Err(Error::invalid(
            "universe too small (or too large) for the plant",
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pool: Vec<u32> = sample(&mut rng, d as usize, pool_len)
        .into_iter()
        .map(|x| x as u32)
        .collect();
    // prototypes[class][p] = feature list
    let prototypes: Vec<Vec<&[u32]>> = pool
        .chunks(cfg.prototypes_per_class * cfg.nnz)
        .map(|class_pool| class_pool.chunks(cfg.nnz).collect())
        .collect();
    let mut prototype_features = [prototypes[0].concat(), prototypes[1].concat()];
    prototype_features
        .iter_mut()
        .for_each(|p| p.sort_unstable());

    let mut samples = Vec::with_capacity(cfg.n);
    let mut labels = Vec::with_capacity(cfg.n);
    let mut clean_labels = Vec::with_capacity(cfg.n);
    let random_count = cfg.nnz - cfg.own - cfg.cross;
    for _ in 0..cfg.n {
        let class = rng.random_range(0..2usize);
        let own = prototypes[class][rng.random_range(0..cfg.prototypes_per_class)];
        let other = prototypes[1 - class][rng.random_range(0..cfg.prototypes_per_class)];
        let mut features: Vec<u32> = Vec::with_capacity(cfg.nnz);
        features.extend(
            sample(&mut rng, cfg.nnz, cfg.own)
                .into_iter()
                .map(|i| own[i]),
        );
        features.extend(
            sample(&mut rng, cfg.nnz, cfg.cross)
                .into_iter()
                .map(|i| other[i]),
        );
        // random fill avoids prototype features so the clean margin is exact
        let mut filled = 0;
        while filled < random_count {
            let x = rng.random_range(0..d) as u32;
            if prototype_features[0].binary_search(&x).is_err()
                && prototype_features[1].binary_search(&x).is_err()
            {
                features.push(x);
                filled += 1;
            }
        }
        let y: i8 = if class == 0 { 1 } else { -1 };
        clean_labels.push(y);
        labels.push(if rng.random_bool(cfg.label_noise) {
            -y
        } else {
            y
        });
        samples.push(SparseBinarySet::new(features, d)?);
    }

    Ok(PlantedData {
        data: LabeledDataset::new(samples, labels, d)?,
        clean_labels,
        prototype_features,
    })
}
