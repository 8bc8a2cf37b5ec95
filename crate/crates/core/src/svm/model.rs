use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{RowSource, SparseVector};
use crate::error::{Error, Result};
use crate::expansion::expanded_dimension;
use crate::sketching::{FamilyId, FamilyKind};

pub const MODEL_MAGIC: &[u8; 8] = b"BBSVMMDL";
const MODEL_VERSION: u32 = 1;

/// What the weight coordinates mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureSpace {
    Unspecified,
    /// Original binary features over a universe of size `D`.
    Raw {
        universe_size: u64,
        normalize: bool,
    },
    /// One-hot expanded b-bit sketches from one specific family.
    Sketch {
        k: usize,
        b: u8,
        family: FamilyId,
        normalize: bool,
    },
}

impl FeatureSpace {
    fn expected_dimension(&self) -> Option<usize> {
        match *self {
            FeatureSpace::Unspecified => None,
            FeatureSpace::Raw { universe_size, .. } => Some(universe_size as usize),
            FeatureSpace::Sketch { k, b, .. } => Some(expanded_dimension(k, b)),
        }
    }
}

/// Trained linear classifier `sign(w'x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub c: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub epochs_run: usize,
    /// Primal plus dual objective at the returned iterate.
    pub duality_gap: f64,
    pub n_support: usize,
    pub features: FeatureSpace,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub label: i8,
    pub decision: f64,
}

impl Prediction {
    fn from_decision(decision: f64) -> Self {
        Prediction {
            label: if decision >= 0.0 { 1 } else { -1 },
            decision,
        }
    }
}

impl SvmModel {
    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    /// Label is the sign of `w'x`; an exact zero maps to +1.
    pub fn predict(&self, x: &SparseVector) -> Prediction {
        Prediction::from_decision(x.dot(&self.weights))
    }

    pub fn predict_row<R: RowSource>(&self, rows: &R, i: usize) -> Prediction {
        Prediction::from_decision(rows.dot(i, &self.weights))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MODEL_MAGIC)?;
        w.write_u32::<LittleEndian>(MODEL_VERSION)?;
        w.write_u64::<LittleEndian>(self.weights.len() as u64)?;
        w.write_f64::<LittleEndian>(self.c)?;
        w.write_f64::<LittleEndian>(self.tolerance)?;
        w.write_u64::<LittleEndian>(self.seed)?;
        w.write_u64::<LittleEndian>(self.epochs_run as u64)?;
        w.write_f64::<LittleEndian>(self.duality_gap)?;
        w.write_u64::<LittleEndian>(self.n_support as u64)?;
        match self.features {
            FeatureSpace::Unspecified => w.write_u8(0)?,
            FeatureSpace::Raw {
                universe_size,
                normalize,
            } => {
                w.write_u8(1)?;
                w.write_u64::<LittleEndian>(universe_size)?;
                w.write_u8(normalize as u8)?;
            }
            FeatureSpace::Sketch {
                k,
                b,
                family,
                normalize,
            } => {
                w.write_u8(2)?;
                w.write_u32::<LittleEndian>(k as u32)?;
                w.write_u8(b)?;
                w.write_u8(match family.kind {
                    FamilyKind::Exact => 0,
                    FamilyKind::Affine => 1,
                })?;
                w.write_u64::<LittleEndian>(family.seed)?;
                w.write_u64::<LittleEndian>(family.universe_size)?;
                w.write_u8(normalize as u8)?;
            }
        }
        for &x in &self.weights {
            w.write_f64::<LittleEndian>(x)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(eof)?;
        if &magic != MODEL_MAGIC {
            return Err(Error::format("not a model file (bad magic)"));
        }
        let version = r.read_u32::<LittleEndian>().map_err(eof)?;
        if version != MODEL_VERSION {
            return Err(Error::format(format!(
                "unsupported model version {version}"
            )));
        }
        let dimension = r.read_u64::<LittleEndian>().map_err(eof)?;
        let c = r.read_f64::<LittleEndian>().map_err(eof)?;
        let tolerance = r.read_f64::<LittleEndian>().map_err(eof)?;
        let seed = r.read_u64::<LittleEndian>().map_err(eof)?;
        let epochs_run = r.read_u64::<LittleEndian>().map_err(eof)? as usize;
        let duality_gap = r.read_f64::<LittleEndian>().map_err(eof)?;
        let n_support = r.read_u64::<LittleEndian>().map_err(eof)? as usize;
        let features = match r.read_u8().map_err(eof)? {
            0 => FeatureSpace::Unspecified,
            1 => FeatureSpace::Raw {
                universe_size: r.read_u64::<LittleEndian>().map_err(eof)?,
                normalize: read_flag(&mut r)?,
            },
            2 => {
                let k = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
                let b = r.read_u8().map_err(eof)?;
                if !(1..=16).contains(&b) {
                    return Err(Error::format(format!("b = {b} outside [1, 16]")));
                }
                let kind = match r.read_u8().map_err(eof)? {
                    0 => FamilyKind::Exact,
                    1 => FamilyKind::Affine,
                    other => return Err(Error::format(format!("unknown family kind {other}"))),
                };
                let seed = r.read_u64::<LittleEndian>().map_err(eof)?;
                let universe_size = r.read_u64::<LittleEndian>().map_err(eof)?;
                FeatureSpace::Sketch {
                    k,
                    b,
                    family: FamilyId {
                        kind,
                        seed,
                        universe_size,
                    },
                    normalize: read_flag(&mut r)?,
                }
            }
            other => return Err(Error::format(format!("unknown feature space tag {other}"))),
        };
        if let Some(expected) = features.expected_dimension() {
            if expected as u64 != dimension {
                return Err(Error::format(format!(
                    "dimension {dimension} does not match the feature space ({expected})"
                )));
            }
        }
        let mut weights = Vec::new();
        for _ in 0..dimension {
            weights.push(r.read_f64::<LittleEndian>().map_err(eof)?);
        }
        Ok(SvmModel {
            weights,
            c,
            tolerance,
            seed,
            epochs_run,
            duality_gap,
            n_support,
            features,
        })
    }
}

fn read_flag<R: Read>(r: &mut R) -> Result<bool> {
    match r.read_u8().map_err(eof)? {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(Error::format(format!("bad flag byte {other}"))),
    }
}

fn eof(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::format("truncated model file")
    } else {
        Error::Io(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
}

/// Fraction of rows whose predicted sign matches the label.
pub fn evaluate<R: RowSource>(model: &SvmModel, rows: &R, labels: &[i8]) -> Result<Evaluation> {
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
    let correct = (0..rows.n_rows())
        .filter(|&i| model.predict_row(rows, i).label == labels[i])
        .count();
    Ok(Evaluation {
        accuracy: correct as f64 / labels.len() as f64,
        correct,
        total: labels.len(),
    })
}
