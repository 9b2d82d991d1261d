//! Binary operator dumps.
//!
//! Layout (little endian): a 64-byte header
//!
//! | offset | type  | content              |
//! |--------|-------|----------------------|
//! | 0      | [u8;4]| `b"DLAP"`            |
//! | 4      | u32   | format version (1)   |
//! | 8      | u32   | space dimension `n`  |
//! | 12     | u32   | spinor dimension     |
//! | 16     | u64   | rows                 |
//! | 24     | u64   | columns              |
//! | 32     | u64   | points per axis      |
//! | 40     | f64   | box half-width `L`   |
//! | 48     | 16 B  | zero padding         |
//!
//! followed by `rows * cols` pairs `(re, im)` of `f64` in row-major order.

use std::io::{Read, Write};

use faer::Mat;

use super::grid::Grid;
use crate::{Error, Result, C64};

pub const MAGIC: &[u8; 4] = b"DLAP";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct DumpHeader {
    pub n: u32,
    pub spinor_dim: u32,
    pub rows: u64,
    pub cols: u64,
    pub points_per_axis: u64,
    pub half_width: f64,
}

pub fn write_dump<W: Write>(out: &mut W, grid: &Grid, spinor_dim: usize, m: &Mat<C64>) -> Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(MAGIC);
    header[4..8].copy_from_slice(&VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&(grid.n as u32).to_le_bytes());
    header[12..16].copy_from_slice(&(spinor_dim as u32).to_le_bytes());
    header[16..24].copy_from_slice(&(m.nrows() as u64).to_le_bytes());
    header[24..32].copy_from_slice(&(m.ncols() as u64).to_le_bytes());
    header[32..40].copy_from_slice(&(grid.points_per_axis as u64).to_le_bytes());
    header[40..48].copy_from_slice(&grid.half_width.to_le_bytes());
    out.write_all(&header)?;
    let mut row = Vec::with_capacity(m.ncols() * 16);
    for i in 0..m.nrows() {
        row.clear();
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            row.extend_from_slice(&z.re.to_le_bytes());
            row.extend_from_slice(&z.im.to_le_bytes());
        }
        out.write_all(&row)?;
    }
    Ok(())
}

pub fn read_dump<R: Read>(input: &mut R) -> Result<(DumpHeader, Mat<C64>)> {
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        return Err(Error::invalid("not a DLAP dump (bad magic)"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(header[o..o + 8].try_into().unwrap());
    if u32_at(4) != VERSION {
        return Err(Error::invalid(format!("unsupported dump version {}", u32_at(4))));
    }
    let h = DumpHeader {
        n: u32_at(8),
        spinor_dim: u32_at(12),
        rows: u64_at(16),
        cols: u64_at(24),
        points_per_axis: u64_at(32),
        half_width: f64::from_le_bytes(header[40..48].try_into().unwrap()),
    };
    let (rows, cols) = (h.rows as usize, h.cols as usize);
    let mut buf = vec![0u8; rows * cols * 16];
    input.read_exact(&mut buf)?;
    let f = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
    let m = Mat::from_fn(rows, cols, |i, j| {
        let o = (i * cols + j) * 16;
        C64::new(f(o), f(o + 8))
    });
    Ok((h, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let grid = Grid::new(2, 1.5, 2, false).unwrap();
        let m = Mat::from_fn(8, 8, |i, j| C64::new(i as f64, -(j as f64) * 0.5));
        let mut bytes = Vec::new();
        write_dump(&mut bytes, &grid, 2, &m).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 64 * 16);
        let (h, back) = read_dump(&mut bytes.as_slice()).unwrap();
        assert_eq!(h.rows, 8);
        assert_eq!(h.half_width, 1.5);
        assert_eq!(back, m);
    }
}
