//! Plain comma-separated matrices: one row per line, no header.

use std::fs;
use std::path::Path;

use super::DenseMatrix;
use crate::error::{AmcError, Result};

pub fn parse_csv(text: &str) -> Result<DenseMatrix> {
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| AmcError::Parse(format!("line {}: {:?}: {e}", ln + 1, f.trim())))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows)
}

pub fn to_csv_string(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    parse_csv(&fs::read_to_string(path)?)
}

pub fn write_csv(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_csv_string(m))?;
    Ok(())
}
