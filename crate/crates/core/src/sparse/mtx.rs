//! MatrixMarket coordinate and array formats.
//!
//! Indices are written 1-based as plain integers and values with 17
//! significant digits, so a write/read cycle reproduces every bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::SparseMatrix;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

struct Header {
    coordinate: bool,
    field: Field,
    symmetry: Symmetry,
}

fn parse_header(line: &str) -> Result<Header> {
    let parts: Vec<String> = line.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if parts.len() < 5 || parts[0] != "%%matrixmarket" || parts[1] != "matrix" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("not a MatrixMarket header: {line:?}"),
        });
    }
    let coordinate = match parts[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(Error::Unsupported(format!("MatrixMarket format {other}"))),
    };
    let field = match parts[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" if coordinate => Field::Pattern,
        other => return Err(Error::Unsupported(format!("MatrixMarket field {other}"))),
    };
    let symmetry = match parts[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(Error::Unsupported(format!("MatrixMarket symmetry {other}"))),
    };
    Ok(Header {
        coordinate,
        field,
        symmetry,
    })
}

/// Data lines after the header, with 1-based file line numbers; comments and
/// blanks skipped.
fn data_lines(reader: impl BufRead) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(Error::Io(e))),
            Ok(l) => {
                let t = l.trim();
                if t.is_empty() || t.starts_with('%') {
                    None
                } else {
                    Some(Ok((i + 2, t.to_string())))
                }
            }
        })
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
        line,
        msg: format!("expected {what}"),
    })
}

/// Reads a coordinate file. Returns the matrix and the number of duplicate
/// positions that were resolved last-wins.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<(SparseMatrix, usize)> {
    read_matrix_market_from(File::open(path)?)
}

pub fn read_matrix_market_from(src: impl Read) -> Result<(SparseMatrix, usize)> {
    let mut reader = BufReader::new(src);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let header = parse_header(first.trim())?;
    if !header.coordinate {
        return Err(Error::Unsupported(
            "array-format file where a sparse matrix was expected".into(),
        ));
    }
    let mut lines = data_lines(reader);
    let (ln, size) = lines.next().ok_or_else(|| Error::Empty("MatrixMarket size line".into()))??;
    let mut it = size.split_whitespace();
    let rows: usize = parse_num(it.next(), ln, "row count")?;
    let cols: usize = parse_num(it.next(), ln, "column count")?;
    let nnz: usize = parse_num(it.next(), ln, "entry count")?;
    let mut triplets = Vec::with_capacity(nnz * if header.symmetry == Symmetry::Symmetric { 2 } else { 1 });
    let mut seen = 0;
    for item in lines {
        let (ln, line) = item?;
        let mut it = line.split_whitespace();
        let i: usize = parse_num(it.next(), ln, "row index")?;
        let j: usize = parse_num(it.next(), ln, "column index")?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(Error::Parse {
                line: ln,
                msg: format!("index ({i}, {j}) outside {rows}x{cols}"),
            });
        }
        let v = match header.field {
            Field::Pattern => 1.0,
            Field::Integer => parse_num::<i64>(it.next(), ln, "integer value")? as f64,
            Field::Real => parse_num::<f64>(it.next(), ln, "real value")?,
        };
        triplets.push((i - 1, j - 1, v));
        if header.symmetry == Symmetry::Symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(Error::Parse {
            line: 0,
            msg: format!("header declares {nnz} entries, found {seen}"),
        });
    }
    SparseMatrix::from_triplets(rows, cols, &triplets)
}

pub fn write_matrix_market(path: impl AsRef<Path>, a: &SparseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_market_to(&mut w, a)?;
    w.flush()?;
    Ok(())
}

pub fn write_matrix_market_to(w: &mut impl Write, a: &SparseMatrix) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.rows(), a.cols(), a.nnz())?;
    for (i, j, v) in a.iter() {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// Dense matrix in MatrixMarket array format (column-major value order).
pub fn write_dense_matrix_market(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.rows(), a.cols())?;
    for v in a.as_slice() {
        writeln!(w, "{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dense_matrix_market(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let header = parse_header(first.trim())?;
    if header.coordinate || header.symmetry != Symmetry::General {
        return Err(Error::Unsupported("expected a general array-format file".into()));
    }
    let mut lines = data_lines(reader);
    let (ln, size) = lines.next().ok_or_else(|| Error::Empty("MatrixMarket size line".into()))??;
    let mut it = size.split_whitespace();
    let rows: usize = parse_num(it.next(), ln, "row count")?;
    let cols: usize = parse_num(it.next(), ln, "column count")?;
    let mut data = Vec::with_capacity(rows * cols);
    for item in lines {
        let (ln, line) = item?;
        data.push(parse_num::<f64>(Some(line.as_str()), ln, "real value")?);
    }
    DenseMatrix::new(rows, cols, data)
}
