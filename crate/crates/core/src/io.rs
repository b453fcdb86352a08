//! Artifact formats: the `RGL1` binary grid, CSV tables and JSON summaries.
//!
//! `RGL1` layout, all fields little-endian:
//! magic `RGL1`, `n: u64`, `dims: [u64; n]`, `h: f64`, then `∏ dims` values of `f64`
//! in row-major order (last index fastest).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{CellField, GridFunction};
use crate::grid::{Grid, DIM};

pub const MAGIC: &[u8; 4] = b"RGL1";

/// Payloads above this many values are rejected while reading.
const MAX_VALUES: u64 = 1 << 32;

/// Contents of an `RGL1` file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGrid {
    pub dims: Vec<usize>,
    pub h: f64,
    pub data: Vec<f64>,
}

impl RawGrid {
    /// Node values of `u`; dims are `[ny + 1, nx + 1]`.
    pub fn from_nodes(u: &GridFunction) -> Self {
        RawGrid { dims: vec![u.grid.ny + 1, u.grid.nx + 1], h: u.grid.h, data: u.values.clone() }
    }

    /// Cell values of `f`; dims are `[ny, nx]`.
    pub fn from_cells(f: &CellField) -> Self {
        RawGrid { dims: vec![f.grid.ny, f.grid.nx], h: f.grid.h, data: f.values.clone() }
    }

    /// Node values on `grid`, which must match the stored shape and spacing.
    pub fn into_nodes(self, grid: Grid) -> Result<GridFunction> {
        self.check(grid, [grid.ny + 1, grid.nx + 1])?;
        Ok(GridFunction { grid, values: self.data })
    }

    pub fn into_cells(self, grid: Grid) -> Result<CellField> {
        self.check(grid, [grid.ny, grid.nx])?;
        Ok(CellField { grid, values: self.data })
    }

    fn check(&self, grid: Grid, dims: [usize; 2]) -> Result<()> {
        if self.dims != dims || self.h.to_bits() != grid.h.to_bits() {
            return Err(Error::ShapeMismatch(format!(
                "file holds dims {:?} at h = {}, expected {dims:?} at h = {}",
                self.dims, self.h, grid.h
            )));
        }
        Ok(())
    }

    pub fn encode<W: Write>(&self, mut w: W) -> Result<()> {
        let expected: usize = self.dims.iter().product();
        if expected != self.data.len() {
            return Err(Error::Format(format!("dims {:?} need {expected} values, got {}", self.dims, self.data.len())));
        }
        w.write_all(MAGIC)?;
        w.write_all(&(self.dims.len() as u64).to_le_bytes())?;
        for &d in &self.dims {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        w.write_all(&self.h.to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn decode<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        let n = read_u64(&mut r)?;
        if n as usize != DIM {
            return Err(Error::UnsupportedDimension(n as usize));
        }
        let mut dims = Vec::with_capacity(DIM);
        let mut total: u64 = 1;
        for _ in 0..n {
            let d = read_u64(&mut r)?;
            total = total.checked_mul(d).filter(|&t| t <= MAX_VALUES).ok_or_else(|| Error::Format("payload too large".into()))?;
            dims.push(d as usize);
        }
        let h = f64::from_le_bytes(read_bytes(&mut r)?);
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Format(format!("spacing {h} is not positive")));
        }
        let mut data = Vec::with_capacity(total as usize);
        for _ in 0..total {
            data.push(f64::from_le_bytes(read_bytes(&mut r)?));
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        Ok(RawGrid { dims, h, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.encode(BufWriter::new(File::create(path)?))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::decode(BufReader::new(File::open(path)?))
    }
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated grid file".into())
    } else {
        Error::Io(e)
    }
}

fn read_bytes<R: Read>(r: &mut R) -> Result<[u8; 8]> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(b)
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_bytes(r)?))
}

/// CSV with a header row taken from the field names of `T`.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Two-column CSV with an explicit header.
pub fn write_pairs(path: &Path, header: [&str; 2], pairs: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for (a, b) in pairs {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
