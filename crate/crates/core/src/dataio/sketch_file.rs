//! Packed b-bit sketch storage and its on-disk layout.
//!
//! ```text
//! magic    8 bytes  "BBITSKCH"
//! version  u32
//! n        u64
//! k        u32
//! b        u8
//! seed     u64
//! D        u64
//! f_i      n x u64          set cardinalities
//! payload  n x ceil(k*b/8)  row-major, value j at bits [j*b, (j+1)*b)
//! ```
//!
//! All integers are little-endian and bits are numbered LSB-first within a
//! byte. Each row is padded to a byte boundary. An optional trailer may
//! follow the payload: `"BBX1"`, family kind (u8, 0 exact / 1 affine), a
//! label flag (u8) and, when the flag is set, `n` labels as i8. Files without
//! a trailer are read as exact-family sketches without labels.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::sketching::{BBitSketch, FamilyId, FamilyKind};

pub const SKETCH_MAGIC: &[u8; 8] = b"BBITSKCH";
pub const SKETCH_VERSION: u32 = 1;
const TRAILER_MAGIC: &[u8; 4] = b"BBX1";
pub const MAX_BITS: u8 = 16;

/// Payload size in bytes for `n` rows of `k` values of `b` bits.
pub fn payload_len(n: u64, k: u64, b: u8) -> u64 {
    n * (k * b as u64).div_ceil(8)
}

/// `n` rows of `k` b-bit values, kept in the packed file layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SketchMatrix {
    k: usize,
    b: u8,
    family: FamilyId,
    cardinalities: Vec<u64>,
    payload: Vec<u8>,
    labels: Option<Vec<i8>>,
}

impl SketchMatrix {
    pub fn new(k: usize, b: u8, family: FamilyId) -> Result<Self> {
        check_bits(b)?;
        if k == 0 || k > u32::MAX as usize {
            return Err(Error::invalid(format!("k must lie in [1, 2^32), got {k}")));
        }
        Ok(SketchMatrix {
            k,
            b,
            family,
            cardinalities: Vec::new(),
            payload: Vec::new(),
            labels: None,
        })
    }

    /// Appends one row; every value must fit in `b` bits.
    pub fn push_row(&mut self, values: &[u16], cardinality: u64) -> Result<()> {
        if values.len() != self.k {
            return Err(Error::mismatch(format!(
                "row has {} values, expected k = {}",
                values.len(),
                self.k
            )));
        }
        if cardinality == 0 {
            return Err(Error::EmptySet("sketched set has cardinality 0".into()));
        }
        let limit = 1u32 << self.b;
        let start = self.payload.len();
        self.payload.resize(start + self.row_bytes(), 0);
        let row = &mut self.payload[start..];
        for (j, &v) in values.iter().enumerate() {
            if v as u32 >= limit {
                self.payload.truncate(start);
                return Err(Error::invalid(format!(
                    "value {v} does not fit in {} bits",
                    self.b
                )));
            }
            put_bits(row, j * self.b as usize, v);
        }
        self.cardinalities.push(cardinality);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn b(&self) -> u8 {
        self.b
    }

    pub fn family(&self) -> FamilyId {
        self.family
    }

    pub fn cardinalities(&self) -> &[u64] {
        &self.cardinalities
    }

    pub fn cardinality(&self, i: usize) -> u64 {
        self.cardinalities[i]
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    /// Bytes per row, `ceil(k*b/8)`.
    pub fn row_bytes(&self) -> usize {
        (self.k * self.b as usize).div_ceil(8)
    }

    pub fn labels(&self) -> Option<&[i8]> {
        self.labels.as_deref()
    }

    pub fn set_labels(&mut self, labels: Vec<i8>) -> Result<()> {
        if labels.len() != self.n() {
            return Err(Error::mismatch(format!(
                "{} labels for {} sketch rows",
                labels.len(),
                self.n()
            )));
        }
        if labels.iter().any(|&y| y != 1 && y != -1) {
            return Err(Error::invalid("labels must be -1 or +1"));
        }
        self.labels = Some(labels);
        Ok(())
    }

    /// Rows at the given positions, in that order, labels included.
    pub fn select_rows(&self, positions: &[usize]) -> SketchMatrix {
        let mut payload = Vec::with_capacity(positions.len() * self.row_bytes());
        for &i in positions {
            payload.extend_from_slice(self.row_slice(i));
        }
        SketchMatrix {
            k: self.k,
            b: self.b,
            family: self.family,
            cardinalities: positions.iter().map(|&i| self.cardinalities[i]).collect(),
            payload,
            labels: self
                .labels
                .as_ref()
                .map(|l| positions.iter().map(|&i| l[i]).collect()),
        }
    }

    fn row_slice(&self, i: usize) -> &[u8] {
        let w = self.row_bytes();
        &self.payload[i * w..(i + 1) * w]
    }

    /// Value `j` of row `i`.
    #[inline]
    pub fn value(&self, i: usize, j: usize) -> u16 {
        debug_assert!(j < self.k);
        let row = self.row_slice(i);
        match self.b {
            8 => row[j] as u16,
            16 => u16::from_le_bytes([row[2 * j], row[2 * j + 1]]),
            b => get_bits(row, j * b as usize, b),
        }
    }

    pub fn row_values(&self, i: usize) -> impl Iterator<Item = u16> + '_ {
        (0..self.k).map(move |j| self.value(i, j))
    }

    /// Row `i` as a standalone sketch.
    pub fn row(&self, i: usize) -> BBitSketch {
        BBitSketch::from_parts(self.family, self.b, self.row_values(i).collect())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(SKETCH_MAGIC)?;
        w.write_u32::<LittleEndian>(SKETCH_VERSION)?;
        w.write_u64::<LittleEndian>(self.n() as u64)?;
        w.write_u32::<LittleEndian>(self.k as u32)?;
        w.write_u8(self.b)?;
        w.write_u64::<LittleEndian>(self.family.seed)?;
        w.write_u64::<LittleEndian>(self.family.universe_size)?;
        for &f in &self.cardinalities {
            w.write_u64::<LittleEndian>(f)?;
        }
        w.write_all(&self.payload)?;

        w.write_all(TRAILER_MAGIC)?;
        w.write_u8(match self.family.kind {
            FamilyKind::Exact => 0,
            FamilyKind::Affine => 1,
        })?;
        match &self.labels {
            Some(labels) => {
                w.write_u8(1)?;
                for &y in labels {
                    w.write_i8(y)?;
                }
            }
            None => w.write_u8(0)?,
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(45 + 8 * self.n() + self.payload.len() + 6 + self.n());
        self.write_to(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic, "magic")?;
        if &magic != SKETCH_MAGIC {
            return Err(Error::format("not a sketch file (bad magic)"));
        }
        let version = read_u32(&mut r, "version")?;
        if version != SKETCH_VERSION {
            return Err(Error::format(format!(
                "unsupported sketch file version {version}"
            )));
        }
        let n = read_u64(&mut r, "n")?;
        let k = read_u32(&mut r, "k")? as usize;
        let b = r.read_u8().map_err(|e| truncated(e, "b"))?;
        if !(1..=MAX_BITS).contains(&b) {
            return Err(Error::format(format!("b = {b} outside [1, {MAX_BITS}]")));
        }
        if k == 0 {
            return Err(Error::format("k = 0"));
        }
        let seed = read_u64(&mut r, "seed")?;
        let universe_size = read_u64(&mut r, "universe size")?;

        let mut cardinalities = Vec::new();
        for _ in 0..n {
            let f = read_u64(&mut r, "cardinalities")?;
            if f == 0 || f > universe_size {
                return Err(Error::format(format!(
                    "cardinality {f} outside [1, {universe_size}]"
                )));
            }
            cardinalities.push(f);
        }

        let expected = payload_len(n, k as u64, b);
        let mut payload = Vec::new();
        r.by_ref().take(expected).read_to_end(&mut payload)?;
        if payload.len() as u64 != expected {
            return Err(Error::format(format!(
                "truncated payload: {} of {expected} bytes",
                payload.len()
            )));
        }

        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        let (kind, labels) = parse_trailer(&rest, n as usize)?;

        Ok(SketchMatrix {
            k,
            b,
            family: FamilyId {
                kind,
                seed,
                universe_size,
            },
            cardinalities,
            payload,
            labels,
        })
    }
}

fn parse_trailer(rest: &[u8], n: usize) -> Result<(FamilyKind, Option<Vec<i8>>)> {
    if rest.is_empty() {
        return Ok((FamilyKind::Exact, None));
    }
    if rest.len() < 6 || &rest[..4] != TRAILER_MAGIC {
        return Err(Error::format("unrecognized data after payload"));
    }
    let kind = match rest[4] {
        0 => FamilyKind::Exact,
        1 => FamilyKind::Affine,
        other => return Err(Error::format(format!("unknown family kind {other}"))),
    };
    let body = &rest[6..];
    let labels = match rest[5] {
        0 if body.is_empty() => None,
        1 if body.len() == n => {
            let labels: Vec<i8> = body.iter().map(|&x| x as i8).collect();
            if labels.iter().any(|&y| y != 1 && y != -1) {
                return Err(Error::format("stored label is not -1 or +1"));
            }
            Some(labels)
        }
        0 | 1 => return Err(Error::format("trailer length does not match n")),
        other => return Err(Error::format(format!("unknown label flag {other}"))),
    };
    Ok((kind, labels))
}

fn check_bits(b: u8) -> Result<()> {
    if (1..=MAX_BITS).contains(&b) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "b must lie in [1, {MAX_BITS}], got {b}"
        )))
    }
}

#[inline]
fn get_bits(row: &[u8], offset: usize, b: u8) -> u16 {
    let byte = offset / 8;
    let mut word = 0u32;
    for (t, &x) in row[byte..].iter().take(3).enumerate() {
        word |= (x as u32) << (8 * t);
    }
    ((word >> (offset % 8)) & ((1u32 << b) - 1)) as u16
}

#[inline]
fn put_bits(row: &mut [u8], offset: usize, value: u16) {
    let byte = offset / 8;
    let word = (value as u32) << (offset % 8);
    for (t, slot) in row[byte..].iter_mut().take(3).enumerate() {
        *slot |= (word >> (8 * t)) as u8;
    }
}

fn truncated(e: std::io::Error, what: &str) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::format(format!("truncated stream while reading {what}"))
    } else {
        Error::Io(e)
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| truncated(e, what))
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    r.read_u32::<LittleEndian>().map_err(|e| truncated(e, what))
}

fn read_u64<R: Read>(r: &mut R, what: &str) -> Result<u64> {
    r.read_u64::<LittleEndian>().map_err(|e| truncated(e, what))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn family() -> FamilyId {
        FamilyId {
            kind: FamilyKind::Exact,
            seed: 42,
            universe_size: 1 << 16,
        }
    }

    /// Reference packer: one bit at a time, LSB-first within each byte.
    fn pack_bitwise(values: &[u16], b: u8) -> Vec<u8> {
        let mut out = vec![0u8; (values.len() * b as usize).div_ceil(8)];
        for (j, &v) in values.iter().enumerate() {
            for t in 0..b as usize {
                if (v >> t) & 1 == 1 {
                    let bit = j * b as usize + t;
                    out[bit / 8] |= 1 << (bit % 8);
                }
            }
        }
        out
    }

    fn unpack_bitwise(bytes: &[u8], k: usize, b: u8) -> Vec<u16> {
        (0..k)
            .map(|j| {
                (0..b as usize).fold(0u16, |acc, t| {
                    let bit = j * b as usize + t;
                    acc | ((((bytes[bit / 8] >> (bit % 8)) & 1) as u16) << t)
                })
            })
            .collect()
    }

    #[test]
    fn worked_layout_example() {
        let mut m = SketchMatrix::new(3, 2, family()).unwrap();
        m.push_row(&[1, 0, 3], 5).unwrap();
        assert_eq!(m.payload(), &[0x31]);
        assert_eq!(pack_bitwise(&[1, 0, 3], 2), vec![0b0011_0001]);
    }

    #[test]
    fn header_layout() {
        let mut m = SketchMatrix::new(3, 2, family()).unwrap();
        m.push_row(&[1, 0, 3], 5).unwrap();
        let bytes = m.to_bytes();
        assert_eq!(&bytes[..8], SKETCH_MAGIC);
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(&bytes[12..20], &1u64.to_le_bytes());
        assert_eq!(&bytes[20..24], &3u32.to_le_bytes());
        assert_eq!(bytes[24], 2);
        assert_eq!(&bytes[25..33], &42u64.to_le_bytes());
        assert_eq!(&bytes[33..41], &65536u64.to_le_bytes());
        assert_eq!(&bytes[41..49], &5u64.to_le_bytes());
        assert_eq!(bytes[49], 0x31);
        assert_eq!(&bytes[50..54], TRAILER_MAGIC);
    }

    #[test]
    fn storage_arithmetic() {
        assert_eq!(payload_len(350_000, 200, 8), 70_000_000);
        assert_eq!(payload_len(3, 3, 2), 3);
        assert_eq!(payload_len(1, 5, 3), 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SketchMatrix::new(3, 0, family()).is_err());
        assert!(SketchMatrix::new(3, 17, family()).is_err());
        let mut m = SketchMatrix::new(2, 2, family()).unwrap();
        assert!(m.push_row(&[4, 0], 1).is_err());
        assert!(m.push_row(&[1], 1).is_err());
        assert_eq!(m.n(), 0);
        assert!(m.payload().is_empty());
    }

    #[test]
    fn malformed_streams() {
        let mut m = SketchMatrix::new(4, 3, family()).unwrap();
        m.push_row(&[1, 2, 3, 4], 9).unwrap();
        m.push_row(&[7, 0, 5, 6], 2).unwrap();
        m.set_labels(vec![1, -1]).unwrap();
        let bytes = m.to_bytes();
        assert_eq!(SketchMatrix::read_from(&bytes[..]).unwrap(), m);

        for cut in [0, 5, 20, 45, 60] {
            let err = SketchMatrix::read_from(&bytes[..cut]).unwrap_err();
            assert!(matches!(err, Error::Format(_)), "cut {cut}: {err}");
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            SketchMatrix::read_from(&bad[..]),
            Err(Error::Format(_))
        ));
        let mut bad = bytes.clone();
        bad[8] = 2;
        assert!(matches!(
            SketchMatrix::read_from(&bad[..]),
            Err(Error::Format(_))
        ));
        let mut bad = bytes.clone();
        bad[24] = 17;
        assert!(matches!(
            SketchMatrix::read_from(&bad[..]),
            Err(Error::Format(_))
        ));
        let mut bad = bytes.clone();
        bad[24] = 0;
        assert!(matches!(
            SketchMatrix::read_from(&bad[..]),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn header_only_file_reads_as_exact() {
        let mut m = SketchMatrix::new(2, 8, family()).unwrap();
        m.push_row(&[200, 17], 3).unwrap();
        let bytes = m.to_bytes();
        let core = &bytes[..bytes.len() - 6];
        let back = SketchMatrix::read_from(core).unwrap();
        assert_eq!(back.family().kind, FamilyKind::Exact);
        assert_eq!(back.labels(), None);
        assert_eq!(back.payload(), m.payload());
    }

    proptest! {
        #[test]
        fn packing_matches_bitwise_reference(
            b in 1u8..=16,
            rows in proptest::collection::vec(proptest::collection::vec(any::<u16>(), 1..40), 1..6),
        ) {
            let k = rows[0].len();
            let mask = ((1u32 << b) - 1) as u16;
            let rows: Vec<Vec<u16>> = rows
                .into_iter()
                .map(|mut r| { r.resize(k, 0); r.iter_mut().for_each(|v| *v &= mask); r })
                .collect();
            let mut m = SketchMatrix::new(k, b, family()).unwrap();
            for (i, r) in rows.iter().enumerate() {
                m.push_row(r, i as u64 + 1).unwrap();
            }
            prop_assert_eq!(m.payload().len() as u64, payload_len(rows.len() as u64, k as u64, b));
            for (i, r) in rows.iter().enumerate() {
                let w = m.row_bytes();
                let packed = &m.payload()[i * w..(i + 1) * w];
                prop_assert_eq!(packed, &pack_bitwise(r, b)[..]);
                prop_assert_eq!(&unpack_bitwise(packed, k, b), r);
                prop_assert_eq!(&m.row_values(i).collect::<Vec<_>>(), r);
            }
            let back = SketchMatrix::read_from(&m.to_bytes()[..]).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
