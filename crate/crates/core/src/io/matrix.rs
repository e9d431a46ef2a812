//! Coordinate text format for sparse and dense matrices.
//!
//! ```text
//! % optional comment lines
//! rows cols nnz
//! i j value        (1-based, one entry per line)
//! ```
//!
//! Values are written with 17 significant digits, so every finite double
//! survives a round trip unchanged.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{RMat, SparseMatrix};

/// Renders a sparse matrix. Entries appear in row-major order.
pub fn format_matrix(a: &SparseMatrix) -> String {
    let mut out = String::with_capacity(32 * (a.nnz() + 1));
    let _ = writeln!(out, "% daemor coordinate matrix");
    let _ = writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for &(i, j, v) in a.entries() {
        let _ = writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v);
    }
    out
}

/// Parses the coordinate format.
pub fn parse_matrix(text: &str) -> Result<SparseMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::MalformedHeader("missing header line".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::MalformedHeader(format!("expected 'rows cols nnz', got '{header}'")));
    }
    let parse_dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::MalformedHeader(format!("'{s}' is not a nonnegative integer")))
    };
    let (rows, cols, nnz) = (parse_dim(fields[0])?, parse_dim(fields[1])?, parse_dim(fields[2])?);
    let mut seen = HashSet::with_capacity(nnz);
    let mut triplets = Vec::with_capacity(nnz);
    for (line, l) in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::MalformedEntry {
                line,
                msg: format!("expected 'i j value', got '{l}'"),
            });
        }
        let idx = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::MalformedEntry {
                line,
                msg: format!("bad index '{s}'"),
            })
        };
        let (i, j) = (idx(f[0])?, idx(f[1])?);
        let v: f64 = f[2].parse().map_err(|_| Error::MalformedEntry {
            line,
            msg: format!("bad value '{}'", f[2]),
        })?;
        if !v.is_finite() {
            return Err(Error::MalformedEntry {
                line,
                msg: "value is not finite".into(),
            });
        }
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(Error::IndexOutOfRange { line, row: i, col: j });
        }
        if !seen.insert((i, j)) {
            return Err(Error::DuplicateEntry { line, row: i, col: j });
        }
        triplets.push((i - 1, j - 1, v));
    }
    if triplets.len() != nnz {
        return Err(Error::MalformedHeader(format!(
            "header declares {nnz} entries, file has {}",
            triplets.len()
        )));
    }
    SparseMatrix::from_triplets(rows, cols, triplets)
}

pub fn write_matrix(path: impl AsRef<Path>, a: &SparseMatrix) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_matrix(a)).map_err(|e| Error::io(path, e))
}

pub fn write_dense(path: impl AsRef<Path>, a: &RMat) -> Result<()> {
    write_matrix(path, &SparseMatrix::from_dense(a.as_ref()))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text)
}

pub fn read_dense(path: impl AsRef<Path>) -> Result<RMat> {
    Ok(read_matrix(path)?.to_dense())
}
