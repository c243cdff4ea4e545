//! File formats for toolkit inputs and outputs.
//!
//! Matrices use the HUBM container: a 28-byte little-endian header followed
//! by a row-major payload.
//!
//! | bytes  | content                                   |
//! |--------|-------------------------------------------|
//! | 0..4   | ASCII `HUBM`                              |
//! | 4..8   | version, u32 = 1                          |
//! | 8..12  | dtype, u32 (0 = binary32, 1 = binary64)   |
//! | 12..20 | rows, u64                                 |
//! | 20..28 | cols, u64                                 |
//! | 28..   | rows × cols elements, little-endian       |
//!
//! Frequency tables, vocabularies and gold labels are text formats, see
//! [`text`]. Reports are JSON, see [`report`].

pub mod report;
pub mod text;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HubError, Result};

pub use report::{to_json_string, write_json, AnalysisReport, Diagnostics, HubEntry};
pub use text::{
    parse_frequency_table, parse_gold_labels, read_frequency_table, read_gold_labels,
    read_vocabulary, FrequencyTable, Vocabulary,
};

pub const MAGIC: &[u8; 4] = b"HUBM";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 28;

/// Element width of a stored matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    fn tag(self) -> u32 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            0 => Some(Dtype::F32),
            1 => Some(Dtype::F64),
            _ => None,
        }
    }
}

/// Row-major real matrix with finite entries.
///
/// Values are held as `f64` whatever the storage width. A binary32 matrix
/// only ever holds values that are exactly representable in binary32, so
/// writing it back narrows without loss.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    dtype: Dtype,
    values: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix, narrowing to binary32 first when `dtype` is `F32`.
    pub fn new(rows: usize, cols: usize, dtype: Dtype, mut values: Vec<f64>) -> Result<Self> {
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| HubError::Shape(format!("{rows} x {cols} overflows")))?;
        if values.len() != expected {
            return Err(HubError::Shape(format!(
                "{rows} x {cols} matrix needs {expected} values, got {}",
                values.len()
            )));
        }
        if dtype == Dtype::F32 {
            for v in values.iter_mut() {
                *v = *v as f32 as f64;
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(HubError::Data(format!(
                "non-finite element at row {}, column {}",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self {
            rows,
            cols,
            dtype,
            values,
        })
    }

    /// Binary64 matrix from row vectors. All rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(HubError::Shape(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, Dtype::F64, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dtype(&self) -> Dtype {
        self.dtype
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    /// Same values, different storage width. Narrowing to binary32 rounds.
    pub fn with_dtype(self, dtype: Dtype) -> Result<Self> {
        Self::new(self.rows, self.cols, dtype, self.values)
    }
}

/// Serializes a matrix into HUBM bytes.
pub fn encode_matrix(m: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + m.values.len() * m.dtype.width());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&m.dtype.tag().to_le_bytes());
    out.extend_from_slice(&(m.rows as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols as u64).to_le_bytes());
    match m.dtype {
        Dtype::F32 => {
            for &v in &m.values {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        Dtype::F64 => {
            for &v in &m.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

fn le_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn le_u64(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

/// Parses HUBM bytes. Errors carry the byte offset of the offending field.
pub fn decode_matrix(bytes: &[u8]) -> Result<DenseMatrix> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        let mut found = [0u8; 4];
        let n = bytes.len().min(4);
        found[..n].copy_from_slice(&bytes[..n]);
        return Err(HubError::BadMagic { found });
    }
    if bytes.len() < HEADER_LEN {
        return Err(HubError::Truncated {
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let version = le_u32(bytes, 4);
    if version != VERSION {
        return Err(HubError::BadHeader {
            field: "version",
            value: version as u64,
            offset: 4,
        });
    }
    let tag = le_u32(bytes, 8);
    let dtype = Dtype::from_tag(tag).ok_or(HubError::BadHeader {
        field: "dtype",
        value: tag as u64,
        offset: 8,
    })?;
    let rows = le_u64(bytes, 12);
    let cols = le_u64(bytes, 20);
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(dtype.width() as u64))
        .and_then(|n| n.checked_add(HEADER_LEN as u64))
        .ok_or(HubError::BadHeader {
            field: "shape",
            value: rows,
            offset: 12,
        })?;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(HubError::Truncated { expected, actual });
    }
    if actual > expected {
        return Err(HubError::Trailing { expected, actual });
    }

    let payload = &bytes[HEADER_LEN..];
    let width = dtype.width();
    let mut values = Vec::with_capacity((rows * cols) as usize);
    for (i, chunk) in payload.chunks_exact(width).enumerate() {
        let v = match dtype {
            Dtype::F32 => f32::from_le_bytes(chunk.try_into().unwrap()) as f64,
            Dtype::F64 => f64::from_le_bytes(chunk.try_into().unwrap()),
        };
        if !v.is_finite() {
            return Err(HubError::NonFinite {
                offset: HEADER_LEN + i * width,
            });
        }
        values.push(v);
    }
    Ok(DenseMatrix {
        rows: rows as usize,
        cols: cols as usize,
        dtype,
        values,
    })
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| HubError::io(path, e))?;
    decode_matrix(&bytes)
}

pub fn write_matrix(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_matrix(m)).map_err(|e| HubError::io(path, e))
}
