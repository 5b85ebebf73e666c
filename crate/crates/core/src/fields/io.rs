//! `VOPF1` binary field format.
//!
//! Layout: magic `VOPF1\0`, `u8` dim, `u8` m, per axis `u32` node count,
//! per axis `f64` lo and `f64` hi, then node data as `f64`, row-major with
//! the last axis fastest and components interleaved. All little-endian.

use std::fs;
use std::path::Path;

use super::field::VectorField;
use super::grid::Grid;
use crate::{Error, Result};

pub const MAGIC: &[u8; 6] = b"VOPF1\0";

impl VectorField {
    pub fn to_vopf_bytes(&self) -> Vec<u8> {
        let g = self.grid();
        let dim = g.dim();
        let mut out = Vec::with_capacity(8 + dim * 20 + self.values().len() * 8);
        out.extend_from_slice(MAGIC);
        out.push(dim as u8);
        out.push(self.components() as u8);
        for a in 0..dim {
            out.extend_from_slice(&(g.counts()[a] as u32).to_le_bytes());
        }
        for a in 0..dim {
            out.extend_from_slice(&g.lo()[a].to_le_bytes());
            out.extend_from_slice(&g.hi()[a].to_le_bytes());
        }
        for v in self.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_vopf_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(6)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let dim = cur.take(1)?[0] as usize;
        let m = cur.take(1)?[0] as usize;
        if !(1..=3).contains(&dim) || m == 0 {
            return Err(Error::Format(format!("bad header: dim = {dim}, m = {m}")));
        }
        let mut counts = Vec::with_capacity(dim);
        for _ in 0..dim {
            counts.push(u32::from_le_bytes(cur.take(4)?.try_into().unwrap()) as usize);
        }
        let mut extents = Vec::with_capacity(dim);
        for _ in 0..dim {
            let lo = cur.f64()?;
            let hi = cur.f64()?;
            extents.push((lo, hi));
        }
        let grid = Grid::new(dim, &extents, &counts).map_err(|e| Error::Format(format!("bad grid: {e}")))?;
        let n = grid.node_count() * m;
        if bytes.len() - cur.pos != n * 8 {
            return Err(Error::Format(format!(
                "expected {} data bytes, found {}",
                n * 8,
                bytes.len() - cur.pos
            )));
        }
        let values = (0..n).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        VectorField::from_values(grid, m, values).map_err(|e| Error::Format(e.to_string()))
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format("truncated file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn write_field(field: &VectorField, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, field.to_vopf_bytes())?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<VectorField> {
    VectorField::from_vopf_bytes(&fs::read(path)?)
}
