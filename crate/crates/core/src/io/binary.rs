//! Little-endian binary grids with a fixed 76-byte header and a text sidecar.
//!
//! Header layout (all little-endian):
//!
//! | offset | size | field                                |
//! |-------:|-----:|--------------------------------------|
//! | 0      | 8    | magic `KRPSGRID`                     |
//! | 8      | 4    | format version (u32)                 |
//! | 12     | 4    | endianness marker `0x01020304` (u32) |
//! | 16     | 1    | kind tag                             |
//! | 17     | 1    | value type: 1 real64, 2 complex128   |
//! | 18     | 1    | unit mode: 0 dimensionless, 1 mm     |
//! | 19     | 1    | reserved, zero                       |
//! | 20     | 8    | n_x (u64)                            |
//! | 28     | 8    | n_p (u64)                            |
//! | 36     | 32   | x origin, x spacing, p origin, p spacing (f64) |
//! | 68     | 8    | wavenumber (f64)                     |
//!
//! The payload follows in row-major order (x outer, p inner), one f64 per real
//! value or an interleaved `re, im` pair per complex value.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::phasespace::{Kind, PhaseSpaceGrid};
use crate::scalar::{lit, to_f64, Real};
use crate::wavefield::{Axis, Domain, Grid1D, SampledField, UnitMode};

pub const MAGIC: &[u8; 8] = b"KRPSGRID";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 76;
const ENDIAN_MARKER: u32 = 0x0102_0304;

/// Kind tags for one-dimensional fields stored in the grid format (`n_p = 1`).
const TAG_FIELD_POSITION: u8 = 20;
const TAG_FIELD_MOMENTUM: u8 = 21;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueType {
    Real64 = 1,
    Complex128 = 2,
}

impl ValueType {
    fn width(self) -> u64 {
        match self {
            ValueType::Real64 => 8,
            ValueType::Complex128 => 16,
        }
    }
}

/// Decoded header of a binary grid file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridFileHeader {
    pub version: u32,
    pub kind_tag: u8,
    pub value_type: ValueType,
    pub unit_mode: UnitMode,
    pub n_x: u64,
    pub n_p: u64,
    pub x_origin: f64,
    pub x_spacing: f64,
    pub p_origin: f64,
    pub p_spacing: f64,
    pub wavenumber: f64,
}

impl GridFileHeader {
    pub fn payload_len(&self) -> Option<u64> {
        self.n_x
            .checked_mul(self.n_p)?
            .checked_mul(self.value_type.width())
    }

    fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..8].copy_from_slice(MAGIC);
        out[8..12].copy_from_slice(&self.version.to_le_bytes());
        out[12..16].copy_from_slice(&ENDIAN_MARKER.to_le_bytes());
        out[16] = self.kind_tag;
        out[17] = self.value_type as u8;
        out[18] = unit_tag(self.unit_mode);
        out[20..28].copy_from_slice(&self.n_x.to_le_bytes());
        out[28..36].copy_from_slice(&self.n_p.to_le_bytes());
        let floats = [
            self.x_origin,
            self.x_spacing,
            self.p_origin,
            self.p_spacing,
            self.wavenumber,
        ];
        for (i, v) in floats.iter().enumerate() {
            out[36 + 8 * i..44 + 8 * i].copy_from_slice(&v.to_le_bytes());
        }
        out
    }

    fn decode(path: &Path, bytes: &[u8]) -> Result<Self> {
        let malformed = |reason: String| Error::MalformedHeader {
            path: path.to_path_buf(),
            reason,
        };
        if bytes.len() < HEADER_LEN {
            return Err(malformed(format!(
                "file holds {} bytes, shorter than the {HEADER_LEN}-byte header",
                bytes.len()
            )));
        }
        if &bytes[0..8] != MAGIC {
            return Err(malformed("bad magic (not a krphase grid file)".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let marker = u32_at(12);
        if marker != ENDIAN_MARKER {
            return Err(malformed(format!("endianness marker {marker:#010x}")));
        }
        let version = u32_at(8);
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                path: path.to_path_buf(),
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let value_type = match bytes[17] {
            1 => ValueType::Real64,
            2 => ValueType::Complex128,
            other => return Err(malformed(format!("unknown value type {other}"))),
        };
        let unit_mode = match bytes[18] {
            0 => UnitMode::Dimensionless,
            1 => UnitMode::Millimeters,
            other => return Err(malformed(format!("unknown unit mode {other}"))),
        };
        if bytes[19] != 0 {
            return Err(malformed("reserved byte is not zero".into()));
        }
        let header = Self {
            version,
            kind_tag: bytes[16],
            value_type,
            unit_mode,
            n_x: u64_at(20),
            n_p: u64_at(28),
            x_origin: f64_at(36),
            x_spacing: f64_at(44),
            p_origin: f64_at(52),
            p_spacing: f64_at(60),
            wavenumber: f64_at(68),
        };
        if header.payload_len().is_none() {
            return Err(malformed("shape overflows".into()));
        }
        Ok(header)
    }

    /// Text description written next to the binary file.
    pub fn sidecar(&self, kind_name: &str) -> String {
        format!(
            "# krphase binary grid\nformat = KRPSGRID\nversion = {}\nbyte_order = little\nheader_bytes = {HEADER_LEN}\n\
             kind = {kind_name}\nvalue_type = {}\nshape = {} x {}\nunit_mode = {}\n\
             x_origin = {:e}\nx_spacing = {:e}\np_origin = {:e}\np_spacing = {:e}\nwavenumber = {:e}\npayload_bytes = {}\n",
            self.version,
            match self.value_type {
                ValueType::Real64 => "real64",
                ValueType::Complex128 => "complex128",
            },
            self.n_x,
            self.n_p,
            self.unit_mode,
            self.x_origin,
            self.x_spacing,
            self.p_origin,
            self.p_spacing,
            self.wavenumber,
            self.payload_len().unwrap_or(0),
        )
    }
}

fn unit_tag(mode: UnitMode) -> u8 {
    match mode {
        UnitMode::Dimensionless => 0,
        UnitMode::Millimeters => 1,
    }
}

/// Path of the text sidecar for `path`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn write_file(path: &Path, header: &GridFileHeader, payload: &[f64], kind_name: &str) -> Result<()> {
    let mut bytes = Vec::with_capacity(HEADER_LEN + payload.len() * 8);
    bytes.extend_from_slice(&header.encode());
    for v in payload {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    fs::write(sidecar_path(path), header.sidecar(kind_name))?;
    Ok(())
}

fn read_file(path: &Path) -> Result<(GridFileHeader, Vec<f64>)> {
    let bytes = fs::read(path)?;
    let header = GridFileHeader::decode(path, &bytes)?;
    let expected = header.payload_len().expect("checked in decode");
    let actual = (bytes.len() - HEADER_LEN) as u64;
    if actual < expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: expected + HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    if actual > expected {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: format!("{} trailing bytes after the payload", actual - expected),
        });
    }
    let payload = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((header, payload))
}

pub fn save_grid<T: Real>(grid: &PhaseSpaceGrid<T>, path: impl AsRef<Path>) -> Result<()> {
    let value_type = if grid.kind().is_real() {
        ValueType::Real64
    } else {
        ValueType::Complex128
    };
    let (n_x, n_p) = grid.dim();
    let header = GridFileHeader {
        version: FORMAT_VERSION,
        kind_tag: grid.kind().tag(),
        value_type,
        unit_mode: grid.unit_mode(),
        n_x: n_x as u64,
        n_p: n_p as u64,
        x_origin: to_f64(grid.x_axis().origin),
        x_spacing: to_f64(grid.x_axis().spacing),
        p_origin: to_f64(grid.p_axis().origin),
        p_spacing: to_f64(grid.p_axis().spacing),
        wavenumber: to_f64(grid.wavenumber()),
    };
    let payload: Vec<f64> = match value_type {
        ValueType::Real64 => grid.values().iter().map(|v| to_f64(v.re)).collect(),
        ValueType::Complex128 => grid
            .values()
            .iter()
            .flat_map(|v| [to_f64(v.re), to_f64(v.im)])
            .collect(),
    };
    write_file(path.as_ref(), &header, &payload, grid.kind().as_str())
}

pub fn load_grid<T: Real>(path: impl AsRef<Path>) -> Result<PhaseSpaceGrid<T>> {
    let path = path.as_ref();
    let (h, payload) = read_file(path)?;
    let kind = Kind::from_tag(h.kind_tag).ok_or_else(|| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: format!("kind tag {} is not a phase-space grid", h.kind_tag),
    })?;
    let values = unpack(&payload, h.value_type);
    let values = Array2::from_shape_vec((h.n_x as usize, h.n_p as usize), values).map_err(|e| {
        Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: e.to_string(),
        }
    })?;
    PhaseSpaceGrid::new(
        kind,
        Axis::new(lit(h.x_origin), lit(h.x_spacing), h.n_x as usize),
        Axis::new(lit(h.p_origin), lit(h.p_spacing), h.n_p as usize),
        h.unit_mode,
        lit(h.wavenumber),
        values,
    )
    .map_err(|e| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn unpack<T: Real>(payload: &[f64], value_type: ValueType) -> Vec<Complex<T>> {
    match value_type {
        ValueType::Real64 => payload.iter().map(|&v| Complex::new(lit(v), T::zero())).collect(),
        ValueType::Complex128 => payload
            .chunks_exact(2)
            .map(|c| Complex::new(lit(c[0]), lit(c[1])))
            .collect(),
    }
}

/// Stores a field as a one-column grid (`n_p = 1`).
pub fn save_field<T: Real>(field: &SampledField<T>, path: impl AsRef<Path>) -> Result<()> {
    let axis = field.grid().axis();
    let (tag, name) = match field.domain() {
        Domain::Position => (TAG_FIELD_POSITION, "field_position"),
        Domain::Momentum => (TAG_FIELD_MOMENTUM, "field_momentum"),
    };
    let header = GridFileHeader {
        version: FORMAT_VERSION,
        kind_tag: tag,
        value_type: ValueType::Complex128,
        unit_mode: field.grid().unit_mode(),
        n_x: axis.len as u64,
        n_p: 1,
        x_origin: to_f64(axis.origin),
        x_spacing: to_f64(axis.spacing),
        p_origin: 0.0,
        p_spacing: 0.0,
        wavenumber: to_f64(field.wavenumber()),
    };
    let payload: Vec<f64> = field
        .amplitudes()
        .iter()
        .flat_map(|v| [to_f64(v.re), to_f64(v.im)])
        .collect();
    write_file(path.as_ref(), &header, &payload, name)
}

pub fn load_field<T: Real>(path: impl AsRef<Path>) -> Result<SampledField<T>> {
    let path = path.as_ref();
    let (h, payload) = read_file(path)?;
    let malformed = |reason: String| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason,
    };
    let domain = match h.kind_tag {
        TAG_FIELD_POSITION => Domain::Position,
        TAG_FIELD_MOMENTUM => Domain::Momentum,
        other => return Err(malformed(format!("kind tag {other} is not a field"))),
    };
    if h.n_p != 1 {
        return Err(malformed(format!("field files have n_p = 1, found {}", h.n_p)));
    }
    let axis = Axis::new(lit::<T>(h.x_origin), lit(h.x_spacing), h.n_x as usize);
    let grid = Grid1D::from_axis(&axis, h.unit_mode).map_err(|e| malformed(e.to_string()))?;
    SampledField::with_domain(grid, unpack(&payload, h.value_type), lit(h.wavenumber), domain)
        .map_err(|e| malformed(e.to_string()))
}
