//! Resemblance, its minwise estimator, and the b-bit collision probability
//! with the matching bias-corrected estimator.

use crate::dataio::SparseBinarySet;
use crate::error::{Error, Result};
use crate::sketching::{BBitSketch, MinwiseSketch};

/// Intersection and union sizes of two sets; `R = intersection / union`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Overlap {
    pub intersection: u64,
    pub union: u64,
}

impl Overlap {
    pub fn resemblance(&self) -> f64 {
        self.intersection as f64 / self.union as f64
    }
}

pub fn overlap(s1: &SparseBinarySet, s2: &SparseBinarySet) -> Result<Overlap> {
    if s1.universe_size() != s2.universe_size() {
        return Err(Error::mismatch(format!(
            "universe sizes differ: {} vs {}",
            s1.universe_size(),
            s2.universe_size()
        )));
    }
    let a = s1.intersection_size(s2) as u64;
    Ok(Overlap {
        intersection: a,
        union: s1.len() as u64 + s2.len() as u64 - a,
    })
}

/// `|S1 ∩ S2| / |S1 ∪ S2|`.
pub fn exact_resemblance(s1: &SparseBinarySet, s2: &SparseBinarySet) -> Result<f64> {
    Ok(overlap(s1, s2)?.resemblance())
}

/// Fraction of permutations under which the two minima coincide.
pub fn estimate_resemblance_minwise(sk1: &MinwiseSketch, sk2: &MinwiseSketch) -> Result<f64> {
    if sk1.family() != sk2.family() {
        return Err(Error::mismatch("sketches come from different families"));
    }
    if sk1.k() != sk2.k() {
        return Err(Error::mismatch(format!(
            "k differs: {} vs {}",
            sk1.k(),
            sk2.k()
        )));
    }
    let hits = sk1
        .values()
        .iter()
        .zip(sk2.values())
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / sk1.k() as f64)
}

/// `R (1 - R) / k`.
pub fn minwise_estimator_variance(resemblance: f64, k: usize) -> f64 {
    resemblance * (1.0 - resemblance) / k as f64
}

/// Correction constants relating the b-bit collision probability to `R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BbitCorrection {
    pub r1: f64,
    pub r2: f64,
    pub a1: f64,
    pub a2: f64,
    pub c1: f64,
    pub c2: f64,
}

/// `r (1-r)^(2^b - 1) / (1 - (1-r)^(2^b))`.
///
/// Powers go through `log1p`/`expm1` so the `r -> 0` limit `2^-b` survives.
/// At `r = 1` the numerator vanishes and the denominator is 1.
pub fn a_coefficient(r: f64, b: u8) -> f64 {
    let m = (1u64 << b) as f64;
    let log_q = (-r).ln_1p();
    let num = r * ((m - 1.0) * log_q).exp();
    let den = -(m * log_q).exp_m1();
    num / den
}

impl BbitCorrection {
    /// Constants for sets of sizes `f1`, `f2` in a universe of size `D`.
    pub fn new(f1: u64, f2: u64, universe_size: u64, b: u8) -> Result<Self> {
        if !(1..=16).contains(&b) {
            return Err(Error::invalid(format!("b must lie in [1, 16], got {b}")));
        }
        if f1 == 0 || f2 == 0 || f1 > universe_size || f2 > universe_size {
            return Err(Error::invalid(format!(
                "set sizes ({f1}, {f2}) must lie in [1, {universe_size}]"
            )));
        }
        let d = universe_size as f64;
        let (r1, r2) = (f1 as f64 / d, f2 as f64 / d);
        let (a1, a2) = (a_coefficient(r1, b), a_coefficient(r2, b));
        let s = r1 + r2;
        Ok(BbitCorrection {
            r1,
            r2,
            a1,
            a2,
            c1: a1 * r2 / s + a2 * r1 / s,
            c2: a1 * r1 / s + a2 * r2 / s,
        })
    }

    /// `C1 + (1 - C2) R`.
    pub fn collision_probability(&self, resemblance: f64) -> f64 {
        self.c1 + (1.0 - self.c2) * resemblance
    }

    /// Inverts [`collision_probability`](Self::collision_probability).
    pub fn resemblance_from(&self, p: f64) -> Result<f64> {
        let denom = 1.0 - self.c2;
        if denom <= 1e-12 {
            return Err(Error::DegenerateCorrection(denom));
        }
        Ok((p - self.c1) / denom)
    }
}

/// Theoretical probability that the lowest `b` bits of the two minima agree,
/// for sets of sizes `f1`, `f2` sharing `a` elements (large-`D` law).
pub fn bbit_collision_probability(
    f1: u64,
    f2: u64,
    a: u64,
    universe_size: u64,
    b: u8,
) -> Result<(f64, BbitCorrection)> {
    if a > f1.min(f2) {
        return Err(Error::invalid(format!(
            "intersection {a} exceeds min({f1}, {f2})"
        )));
    }
    let corr = BbitCorrection::new(f1, f2, universe_size, b)?;
    let r = a as f64 / (f1 + f2 - a) as f64;
    Ok((corr.collision_probability(r), corr))
}

/// Output of the b-bit estimator. `resemblance` is unclamped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BbitEstimate {
    pub resemblance: f64,
    pub match_fraction: f64,
}

impl BbitEstimate {
    /// The estimate clipped to `[0, 1]`, for display.
    pub fn clamped(&self) -> f64 {
        self.resemblance.clamp(0.0, 1.0)
    }
}

/// Fraction of positions where all `b` bits agree.
pub fn bbit_match_fraction(sk1: &BBitSketch, sk2: &BBitSketch) -> Result<f64> {
    if sk1.family() != sk2.family() {
        return Err(Error::mismatch("sketches come from different families"));
    }
    if sk1.b() != sk2.b() {
        return Err(Error::mismatch(format!(
            "b differs: {} vs {}",
            sk1.b(),
            sk2.b()
        )));
    }
    if sk1.k() != sk2.k() {
        return Err(Error::mismatch(format!(
            "k differs: {} vs {}",
            sk1.k(),
            sk2.k()
        )));
    }
    let hits = sk1
        .values()
        .iter()
        .zip(sk2.values())
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / sk1.k() as f64)
}

/// Bias-corrected resemblance estimate from b-bit sketches and the two
/// set sizes.
pub fn estimate_resemblance_bbit(
    sk1: &BBitSketch,
    sk2: &BBitSketch,
    f1: u64,
    f2: u64,
    universe_size: u64,
) -> Result<BbitEstimate> {
    let p = bbit_match_fraction(sk1, sk2)?;
    let corr = BbitCorrection::new(f1, f2, universe_size, sk1.b())?;
    Ok(BbitEstimate {
        resemblance: corr.resemblance_from(p)?,
        match_fraction: p,
    })
}
