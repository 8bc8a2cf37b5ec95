//! Permutation families and minwise / b-bit sketches.
//!
//! Member `j` of a family is generated from its own ChaCha stream (stream id
//! `j` under the family seed), so a single member can be rebuilt without
//! materializing the others and a family with `k` members is a prefix of the
//! family with `k' > k` members under the same seed.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataio::{LabeledDataset, SketchMatrix, SparseBinarySet};
use crate::error::{Error, Result};

/// Largest universe for which full permutation tables are built.
pub const MAX_EXACT_UNIVERSE: u64 = 1 << 24;
/// Affine families work on `u32` feature indices.
pub const MAX_AFFINE_UNIVERSE: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    /// Uniformly random permutations stored as Fisher–Yates tables.
    Exact,
    /// `x -> (a*x + c) mod P` with `P` the smallest prime `>= D`.
    Affine,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Exact => "exact",
            FamilyKind::Affine => "affine",
        })
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(FamilyKind::Exact),
            "affine" => Ok(FamilyKind::Affine),
            other => Err(Error::invalid(format!(
                "unknown family kind {other:?} (expected exact or affine)"
            ))),
        }
    }
}

/// Identifies the permutations a sketch was computed with. Two sketches are
/// comparable only when their ids are equal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FamilyId {
    pub kind: FamilyKind,
    pub seed: u64,
    pub universe_size: u64,
}

impl FamilyId {
    pub fn new(kind: FamilyKind, universe_size: u64, seed: u64) -> Result<Self> {
        if universe_size < 2 {
            return Err(Error::invalid(format!(
                "universe size must be at least 2, got {universe_size}"
            )));
        }
        match kind {
            FamilyKind::Exact if universe_size > MAX_EXACT_UNIVERSE => {
                Err(Error::invalid(format!(
                "exact permutations need D <= 2^24 (got {universe_size}); use the affine family"
            )))
            }
            FamilyKind::Affine if universe_size > MAX_AFFINE_UNIVERSE => Err(Error::invalid(
                format!("affine family supports D <= 2^32, got {universe_size}"),
            )),
            _ => Ok(FamilyId {
                kind,
                seed,
                universe_size,
            }),
        }
    }

    /// Builds member `j` on its own.
    pub fn member(&self, j: usize) -> Permutation {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(j as u64);
        match self.kind {
            FamilyKind::Exact => {
                let mut table: Vec<u32> = (0..self.universe_size as u32).collect();
                table.shuffle(&mut rng);
                Permutation::Exact { table }
            }
            FamilyKind::Affine => {
                let prime = smallest_prime_at_least(self.universe_size);
                Permutation::Affine {
                    a: rng.random_range(1..prime),
                    c: rng.random_range(0..prime),
                    prime,
                }
            }
        }
    }
}

/// Smallest prime `>= n`.
pub fn smallest_prime_at_least(n: u64) -> u64 {
    (n.max(2)..)
        .find(|&p| primal_check::miller_rabin(p))
        .expect("a prime exists above any u64 we accept")
}

/// One member of a permutation family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Permutation {
    Exact { table: Vec<u32> },
    Affine { a: u64, c: u64, prime: u64 },
}

impl Permutation {
    /// Size of the domain the member permutes (`D` or `P`).
    pub fn domain_size(&self) -> u64 {
        match self {
            Permutation::Exact { table } => table.len() as u64,
            Permutation::Affine { prime, .. } => *prime,
        }
    }

    #[inline]
    pub fn apply(&self, x: u64) -> u64 {
        match self {
            Permutation::Exact { table } => table[x as usize] as u64,
            Permutation::Affine { a, c, prime } => {
                ((*a as u128 * x as u128 + *c as u128) % *prime as u128) as u64
            }
        }
    }

    /// `min(π(S))`.
    pub fn min_image(&self, set: &SparseBinarySet) -> u64 {
        match self {
            Permutation::Exact { table } => set
                .indices()
                .iter()
                .map(|&x| table[x as usize])
                .min()
                .expect("sets are non-empty") as u64,
            _ => set
                .indices()
                .iter()
                .map(|&x| self.apply(x as u64))
                .min()
                .expect("sets are non-empty"),
        }
    }
}

/// `k` permutations built from one seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationFamily {
    id: FamilyId,
    members: Vec<Permutation>,
}

/// Materializes all `k` members. Exact families cost `4*D` bytes per member;
/// use [`sketch_dataset`] to stream members for large `k*D`.
pub fn build_family(
    kind: FamilyKind,
    k: usize,
    universe_size: u64,
    seed: u64,
) -> Result<PermutationFamily> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let id = FamilyId::new(kind, universe_size, seed)?;
    let members = (0..k).map(|j| id.member(j)).collect();
    Ok(PermutationFamily { id, members })
}

impl PermutationFamily {
    pub fn id(&self) -> FamilyId {
        self.id
    }

    pub fn k(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[Permutation] {
        &self.members
    }

    pub fn member(&self, j: usize) -> &Permutation {
        &self.members[j]
    }
}

/// `k` minima, one per family member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinwiseSketch {
    family: FamilyId,
    values: Vec<u64>,
}

impl MinwiseSketch {
    pub fn from_parts(family: FamilyId, values: Vec<u64>) -> Self {
        MinwiseSketch { family, values }
    }

    pub fn family(&self) -> FamilyId {
        self.family
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }
}

/// Lowest `b` bits of each minimum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BBitSketch {
    family: FamilyId,
    b: u8,
    values: Vec<u16>,
}

impl BBitSketch {
    pub fn from_parts(family: FamilyId, b: u8, values: Vec<u16>) -> Self {
        BBitSketch { family, b, values }
    }

    pub fn family(&self) -> FamilyId {
        self.family
    }

    pub fn b(&self) -> u8 {
        self.b
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }
}

fn check_universe(set: &SparseBinarySet, family: FamilyId) -> Result<()> {
    if set.universe_size() != family.universe_size {
        return Err(Error::mismatch(format!(
            "set universe {} differs from family universe {}",
            set.universe_size(),
            family.universe_size
        )));
    }
    Ok(())
}

pub fn minhash(set: &SparseBinarySet, family: &PermutationFamily) -> Result<MinwiseSketch> {
    check_universe(set, family.id)?;
    Ok(MinwiseSketch {
        family: family.id,
        values: family.members.iter().map(|p| p.min_image(set)).collect(),
    })
}

pub fn truncate(sketch: &MinwiseSketch, b: u8) -> Result<BBitSketch> {
    if !(1..=16).contains(&b) {
        return Err(Error::invalid(format!("b must lie in [1, 16], got {b}")));
    }
    let mask = (1u64 << b) - 1;
    Ok(BBitSketch {
        family: sketch.family,
        b,
        values: sketch.values.iter().map(|&z| (z & mask) as u16).collect(),
    })
}

/// Full minima for a collection of sets, row-major `n x k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinwiseMatrix {
    family: FamilyId,
    k: usize,
    cardinalities: Vec<u64>,
    values: Vec<u64>,
}

impl MinwiseMatrix {
    pub fn family(&self) -> FamilyId {
        self.family
    }

    pub fn n(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> MinwiseSketch {
        MinwiseSketch {
            family: self.family,
            values: self.values[i * self.k..(i + 1) * self.k].to_vec(),
        }
    }

    /// Keeps the first `k` members and the lowest `b` bits of each minimum.
    pub fn truncate(&self, k: usize, b: u8) -> Result<SketchMatrix> {
        if k == 0 || k > self.k {
            return Err(Error::invalid(format!(
                "cannot take {k} of {} permutations",
                self.k
            )));
        }
        let mut out = SketchMatrix::new(k, b, self.family)?;
        let mask = (1u64 << b) - 1;
        let mut row = vec![0u16; k];
        for (i, &f) in self.cardinalities.iter().enumerate() {
            let src = &self.values[i * self.k..i * self.k + k];
            for (dst, &z) in row.iter_mut().zip(src) {
                *dst = (z & mask) as u16;
            }
            out.push_row(&row, f)?;
        }
        Ok(out)
    }
}

/// Minima of every set under `k` members of the family `id`, generating one
/// member at a time (in parallel across members).
pub fn minhash_sets(sets: &[SparseBinarySet], k: usize, id: FamilyId) -> Result<MinwiseMatrix> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if sets.is_empty() {
        return Err(Error::NoSamples);
    }
    for s in sets {
        check_universe(s, id)?;
    }
    let columns: Vec<Vec<u64>> = (0..k)
        .into_par_iter()
        .map(|j| {
            let perm = id.member(j);
            sets.iter().map(|s| perm.min_image(s)).collect()
        })
        .collect();
    let n = sets.len();
    let mut values = vec![0u64; n * k];
    for (j, col) in columns.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            values[i * k + j] = z;
        }
    }
    Ok(MinwiseMatrix {
        family: id,
        k,
        cardinalities: sets.iter().map(|s| s.len() as u64).collect(),
        values,
    })
}

/// Sketches every sample of `data` under one shared family and packs the
/// b-bit values. Labels are carried along.
pub fn sketch_dataset(
    data: &LabeledDataset,
    k: usize,
    b: u8,
    kind: FamilyKind,
    seed: u64,
) -> Result<SketchMatrix> {
    if !(1..=16).contains(&b) {
        return Err(Error::invalid(format!("b must lie in [1, 16], got {b}")));
    }
    let id = FamilyId::new(kind, data.universe_size(), seed)?;
    let mut sketches = minhash_sets(data.samples(), k, id)?.truncate(k, b)?;
    sketches.set_labels(data.labels().to_vec())?;
    Ok(sketches)
}
