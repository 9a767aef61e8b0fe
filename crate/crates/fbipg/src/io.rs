//! CSV data files: one row per line, comma-separated decimal literals, no
//! header. Vector files are a single column. Floats are written in shortest
//! round-trip form.

use std::path::Path;

use crate::linalg::{all_finite, DenseMatrix, Vector};
use crate::{Error, Result};

pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!(
                    "{}:{}: not a decimal literal: {:?}",
                    path.display(),
                    lineno + 1,
                    field.trim()
                ))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{}: empty data file",
            path.display()
        )));
    }
    let m = DenseMatrix::from_rows(&rows).map_err(|_| {
        Error::InvalidArgument(format!("{}: ragged rows", path.display()))
    })?;
    Ok(m)
}

pub fn read_vector_csv(path: &Path) -> Result<Vector> {
    let m = read_matrix_csv(path)?;
    if m.cols() != 1 {
        return Err(Error::InvalidArgument(format!(
            "{}: expected a single column, found {}",
            path.display(),
            m.cols()
        )));
    }
    Ok((0..m.rows()).map(|i| m.get(i, 0)).collect())
}

pub fn write_matrix_csv(path: &Path, m: &DenseMatrix) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_vector_csv(path: &Path, v: &[f64]) -> Result<()> {
    let mut out = String::new();
    for x in v {
        out.push_str(&format!("{x}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Validate a vector loaded from user input.
pub fn check_finite_vector(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidArgument(format!("{what}: empty vector")));
    }
    if !all_finite(v) {
        return Err(Error::InvalidArgument(format!("{what}: non-finite entry")));
    }
    Ok(())
}
