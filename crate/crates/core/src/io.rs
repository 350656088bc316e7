//! FLD1 binary field files.
//!
//! Layout (all little-endian):
//!
//! ```text
//! "FLD1" | kind u8 | rank u8 | flags u8 | reserved u8 (=0)
//! per axis: n u32 | origin f64 | spacing f64 | boundary u8 (0 open, 1 periodic)
//! values: f64 x (sites * ncomp), site-major, last axis fastest
//! jets (flag bit 0): f64 x (rank * sites * ncomp), axis-major
//! FNV-1a 64 of every preceding byte, u64
//! ```
//!
//! Flag bits: 0 jets present, 1 cell-centered, 2 reversed orientation.
//! Kinds: 1 spinor, 2 phi, 3 gauge, 4 su2, 5 scalar.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::fields::{GaugeField, PhiField, SpinorField, Su2Field};
use crate::lattice::{Axis, Boundary, Grid, SampledField, ScalarField};

pub const MAGIC: &[u8; 4] = b"FLD1";
const FLAG_JET: u8 = 1;
const FLAG_CELL: u8 = 2;
const FLAG_REVERSED: u8 = 4;
const AXIS_BYTES: usize = 21;

#[derive(Debug, Error)]
pub enum FieldIoError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not an FLD1 file")]
    BadMagic,
    #[error("file truncated: {found} bytes, expected {expected}")]
    Truncated { expected: usize, found: usize },
    #[error("trailing bytes: {found} bytes, expected {expected}")]
    TrailingBytes { expected: usize, found: usize },
    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    Checksum { stored: u64, computed: u64 },
    #[error("unknown field kind {0}")]
    UnknownKind(u8),
    #[error("unsupported rank {0}")]
    BadRank(u8),
    #[error("unknown flag bits {0:#04x}")]
    BadFlags(u8),
    #[error("reserved byte is {0}, expected 0")]
    Reserved(u8),
    #[error("unknown boundary code {0}")]
    BadBoundary(u8),
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("payload rejected: {0}")]
    BadPayload(String),
}

impl FieldIoError {
    /// Stable numeric code, also used as the CLI exit status.
    pub fn code(&self) -> u8 {
        match self {
            FieldIoError::Io(_) => 10,
            FieldIoError::BadMagic => 11,
            FieldIoError::Truncated { .. } => 12,
            FieldIoError::TrailingBytes { .. } => 13,
            FieldIoError::Checksum { .. } => 14,
            FieldIoError::UnknownKind(_) => 15,
            FieldIoError::BadRank(_) => 16,
            FieldIoError::BadFlags(_) => 17,
            FieldIoError::Reserved(_) => 18,
            FieldIoError::BadBoundary(_) => 19,
            FieldIoError::BadGrid(_) => 20,
            FieldIoError::BadPayload(_) => 21,
        }
    }
}

/// FNV-1a, 64-bit.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Spinor = 1,
    Phi = 2,
    Gauge = 3,
    Su2 = 4,
    Scalar = 5,
}

impl FieldKind {
    fn from_code(c: u8) -> Result<Self, FieldIoError> {
        Ok(match c {
            1 => FieldKind::Spinor,
            2 => FieldKind::Phi,
            3 => FieldKind::Gauge,
            4 => FieldKind::Su2,
            5 => FieldKind::Scalar,
            other => return Err(FieldIoError::UnknownKind(other)),
        })
    }

    pub fn ncomp(self, rank: usize) -> usize {
        match self {
            FieldKind::Spinor | FieldKind::Phi => 4,
            FieldKind::Gauge => 3 * rank,
            FieldKind::Su2 => 8,
            FieldKind::Scalar => 1,
        }
    }
}

/// Any field that can be stored in an FLD1 file.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Spinor(SpinorField),
    Phi(PhiField),
    Gauge(GaugeField),
    Su2(Su2Field),
    Scalar(ScalarField),
}

impl Field {
    pub fn kind(&self) -> FieldKind {
        match self {
            Field::Spinor(_) => FieldKind::Spinor,
            Field::Phi(_) => FieldKind::Phi,
            Field::Gauge(_) => FieldKind::Gauge,
            Field::Su2(_) => FieldKind::Su2,
            Field::Scalar(_) => FieldKind::Scalar,
        }
    }

    pub fn sampled(&self) -> &SampledField {
        match self {
            Field::Spinor(f) => f.as_sampled(),
            Field::Phi(f) => f.as_sampled(),
            Field::Gauge(f) => f.as_sampled(),
            Field::Su2(f) => f.as_sampled(),
            Field::Scalar(f) => f.as_sampled(),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.sampled().grid()
    }
}

/// Serializes a field to bytes, checksum included.
pub fn encode(field: &Field) -> Vec<u8> {
    let s = field.sampled();
    let grid = s.grid();
    let mut flags = 0;
    if s.has_jet() {
        flags |= FLAG_JET;
    }
    if grid.is_cell_centered() {
        flags |= FLAG_CELL;
    }
    if grid.orientation() < 0.0 {
        flags |= FLAG_REVERSED;
    }
    let nvals = s.values().len() + s.jet().map_or(0, |j| j.len());
    let mut out = Vec::with_capacity(8 + AXIS_BYTES * grid.rank() + 8 * nvals + 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[field.kind() as u8, grid.rank() as u8, flags, 0]);
    for ax in grid.axes() {
        out.extend_from_slice(&(ax.n as u32).to_le_bytes());
        out.extend_from_slice(&ax.origin.to_le_bytes());
        out.extend_from_slice(&ax.spacing.to_le_bytes());
        out.push(match ax.boundary {
            Boundary::Open => 0,
            Boundary::Periodic => 1,
        });
    }
    for v in s.values().iter().chain(s.jet().unwrap_or(&[])) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let sum = fnv1a64(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

fn read_f64s(bytes: &[u8]) -> Vec<f64> {
    bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect()
}

/// Parses and validates an FLD1 byte buffer.
pub fn decode(bytes: &[u8]) -> Result<Field, FieldIoError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(FieldIoError::BadMagic);
    }
    if bytes.len() < 16 {
        return Err(FieldIoError::Truncated { expected: 16, found: bytes.len() });
    }
    let kind = FieldKind::from_code(bytes[4])?;
    let rank = bytes[5];
    if !(3..=4).contains(&rank) {
        return Err(FieldIoError::BadRank(rank));
    }
    let rank = rank as usize;
    let flags = bytes[6];
    if flags & !(FLAG_JET | FLAG_CELL | FLAG_REVERSED) != 0 {
        return Err(FieldIoError::BadFlags(flags));
    }
    if bytes[7] != 0 {
        return Err(FieldIoError::Reserved(bytes[7]));
    }
    let header = 8 + AXIS_BYTES * rank;
    if bytes.len() < header + 8 {
        return Err(FieldIoError::Truncated { expected: header + 8, found: bytes.len() });
    }
    let mut axes = Vec::with_capacity(rank);
    for i in 0..rank {
        let a = &bytes[8 + AXIS_BYTES * i..8 + AXIS_BYTES * (i + 1)];
        let n = u32::from_le_bytes(a[0..4].try_into().expect("4 bytes")) as usize;
        let origin = f64::from_le_bytes(a[4..12].try_into().expect("8 bytes"));
        let spacing = f64::from_le_bytes(a[12..20].try_into().expect("8 bytes"));
        let boundary = match a[20] {
            0 => Boundary::Open,
            1 => Boundary::Periodic,
            other => return Err(FieldIoError::BadBoundary(other)),
        };
        axes.push(Axis { n, origin, spacing, boundary });
    }
    // Sample count check comes before the checksum so that short files
    // report as truncated.
    let ncomp = kind.ncomp(rank);
    let per_site = ncomp * if flags & FLAG_JET != 0 { 1 + rank } else { 1 };
    let expected = axes
        .iter()
        .try_fold(per_site, |acc, a| acc.checked_mul(a.n))
        .and_then(|v| v.checked_mul(8))
        .and_then(|v| v.checked_add(header + 8))
        .unwrap_or(usize::MAX);
    if bytes.len() < expected {
        return Err(FieldIoError::Truncated { expected, found: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(FieldIoError::TrailingBytes { expected, found: bytes.len() });
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(trailer.try_into().expect("8 bytes"));
    let computed = fnv1a64(body);
    if stored != computed {
        return Err(FieldIoError::Checksum { stored, computed });
    }
    if let Some(i) = axes.iter().position(|a| !a.origin.is_finite()) {
        return Err(FieldIoError::BadGrid(format!("axis {i} origin is not finite")));
    }
    let mut grid = Grid::new(axes).map_err(|e| FieldIoError::BadGrid(e.to_string()))?.cell_centered(flags & FLAG_CELL != 0);
    if flags & FLAG_REVERSED != 0 {
        grid = grid.with_orientation(-1.0);
    }
    let nvals = grid.len() * ncomp;
    let expected = body.len();
    let njet = expected - header - 8 * nvals;
    let values = read_f64s(&body[header..header + 8 * nvals]);
    let payload = |e: crate::error::Error| FieldIoError::BadPayload(e.to_string());
    let mut field = SampledField::new(grid, ncomp, values).map_err(payload)?;
    if njet > 0 {
        field = field.with_jet(read_f64s(&body[header + 8 * nvals..expected])).map_err(payload)?;
    }
    field.check_finite().map_err(payload)?;
    Ok(match kind {
        FieldKind::Spinor => Field::Spinor(SpinorField::new(field).map_err(payload)?),
        FieldKind::Phi => Field::Phi(PhiField::new(field).map_err(payload)?),
        FieldKind::Gauge => Field::Gauge(GaugeField::new(field).map_err(payload)?),
        FieldKind::Su2 => Field::Su2(Su2Field::new(field).map_err(payload)?),
        FieldKind::Scalar => Field::Scalar(ScalarField::from_sampled(field).map_err(payload)?),
    })
}

/// Writes atomically: a temporary file in the target directory is renamed
/// over `path` once complete.
pub fn write_field(path: &Path, field: &Field) -> Result<(), FieldIoError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(&encode(field))?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| FieldIoError::Io(e.error))?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<Field, FieldIoError> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{random_gauge, random_spinor};

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn header_size() {
        let grid = Grid::open_box(3, 4, 0.0, 1.0).unwrap();
        let f = Field::Scalar(ScalarField::new(grid.clone(), vec![0.0; grid.len()]).unwrap());
        assert_eq!(encode(&f).len(), 8 + 21 * 3 + 8 * 64 + 8);
    }

    #[test]
    fn round_trip_in_memory() {
        let grid = Grid::open_box(4, 4, -1.0, 1.0).unwrap().cell_centered(true).with_orientation(-1.0);
        for f in [Field::Spinor(random_spinor(grid.clone(), 5)), Field::Gauge(GaugeField::new(random_gauge(grid.clone(), 5).into_sampled().without_jet()).unwrap())] {
            let back = decode(&encode(&f)).unwrap();
            assert_eq!(back, f);
        }
    }

    #[test]
    fn error_codes() {
        let grid = Grid::open_box(3, 4, 0.0, 1.0).unwrap();
        let f = Field::Scalar(ScalarField::new(grid.clone(), vec![1.5; grid.len()]).unwrap());
        let good = encode(&f);
        assert!(matches!(decode(b"FLD2xxxxxxxxxxxxxxx"), Err(FieldIoError::BadMagic)));
        assert!(matches!(decode(&good[..10]), Err(FieldIoError::Truncated { .. })));
        assert!(matches!(decode(&good[..40]), Err(FieldIoError::Truncated { .. })));
        assert!(matches!(decode(&good[..good.len() - 1]), Err(FieldIoError::Truncated { .. })));
        let mut long = good.clone();
        long.push(0);
        assert!(matches!(decode(&long), Err(FieldIoError::TrailingBytes { .. })));
        let mut bad = good.clone();
        bad[20] ^= 1;
        assert!(matches!(decode(&bad), Err(FieldIoError::Checksum { .. })));
        let mut kind = good[..good.len() - 8].to_vec();
        kind[4] = 9;
        let s = fnv1a64(&kind);
        kind.extend_from_slice(&s.to_le_bytes());
        assert_eq!(decode(&kind).unwrap_err().code(), 15);
        let mut short = good[..good.len() - 16].to_vec();
        let s = fnv1a64(&short);
        short.extend_from_slice(&s.to_le_bytes());
        assert!(matches!(decode(&short), Err(FieldIoError::Truncated { .. })));
    }

}
