//! Dense matrix container: `rows: u64 LE`, `cols: u64 LE`, then
//! `rows * cols` row-major `f64 LE` values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub fn write_binary_matrix_to(w: &mut impl Write, a: &DenseMatrix) -> Result<()> {
    w.write_all(&(a.rows() as u64).to_le_bytes())?;
    w.write_all(&(a.cols() as u64).to_le_bytes())?;
    for v in a.to_row_major() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary_matrix_from(r: &mut impl Read) -> Result<DenseMatrix> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let len = rows.checked_mul(cols).ok_or_else(|| Error::InvalidDimensions(format!("{rows}x{cols}")))?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut word)?;
        data.push(f64::from_le_bytes(word));
    }
    DenseMatrix::from_row_major(rows, cols, &data)
}

pub fn write_binary_matrix(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_binary_matrix_to(&mut w, a)?;
    w.flush()?;
    Ok(())
}

pub fn read_binary_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    read_binary_matrix_from(&mut BufReader::new(File::open(path)?))
}
