//! File formats: headerless CSV and `{rows, cols, data}` JSON for matrices,
//! pretty JSON for reports.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Shortest representation that parses back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn matrix_to_csv_string(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|&v| format_f64(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, m: &DenseMatrix) -> Result<()> {
    std::fs::write(path, matrix_to_csv_string(m))?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    let file = File::open(path)?;
    parse_matrix_csv(file, path)
}

pub fn parse_matrix_csv<R: Read>(reader: R, path: &Path) -> Result<DenseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("not a number: {field:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("expected {} fields, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows)
}

pub fn read_matrix_json(path: &Path) -> Result<DenseMatrix> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_matrix_json(path: &Path, m: &DenseMatrix) -> Result<()> {
    write_json(path, m)
}

/// Reads a matrix as JSON when the extension is `.json`, CSV otherwise.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_matrix_json(path),
        _ => read_matrix_csv(path),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(to_json_string(value)?.as_bytes())?;
    w.flush()?;
    Ok(())
}
