//! Dataset and artifact I/O.
//!
//! Dataset CSV layout: the first row holds the grid points t1..tD; every
//! following row holds D curve values plus one trailing response value (a
//! real number for regression, an integer class label 1..H for
//! classification). An optional header row is detected by a non-numeric
//! first cell. Prediction inputs use the same layout with the response
//! column optional.

use fsir::estimators::{CurveDataset, Response, Task};
use fsir::{Error, Result};
use nalgebra::DMatrix;
use std::path::Path;

/// Rows of raw numbers with their 1-based line numbers, header skipped.
fn read_numeric_rows(path: &Path) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    let mut first = true;
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record =
            record.map_err(|e| Error::Data(format!("{}: line {line}: {e}", path.display())))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if first {
            first = false;
            // A non-numeric first cell marks a header row to skip.
            if record.get(0).is_some_and(|cell| cell.parse::<f64>().is_err()) {
                continue;
            }
        }
        let mut values = Vec::with_capacity(record.len());
        for cell in record.iter() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::Data(format!(
                    "{}: line {line}: could not parse `{cell}` as a number",
                    path.display()
                ))
            })?;
            values.push(v);
        }
        rows.push((line, values));
    }
    Ok(rows)
}

/// Read a full dataset (curves + responses) for fitting or benchmarking.
pub fn read_dataset(path: &Path, task: Task) -> Result<CurveDataset> {
    let rows = read_numeric_rows(path)?;
    let mut it = rows.into_iter();
    let (_, grid) = it
        .next()
        .ok_or_else(|| Error::Data(format!("{}: no grid row found", path.display())))?;
    let d = grid.len();
    let mut curves = Vec::new();
    let mut responses = Vec::new();
    let mut n = 0usize;
    for (line, row) in it {
        if row.len() != d + 1 {
            return Err(Error::Data(format!(
                "{}: line {line}: expected {} values ({d} curve points + 1 response), got {}",
                path.display(),
                d + 1,
                row.len()
            )));
        }
        curves.extend_from_slice(&row[..d]);
        responses.push((line, row[d]));
        n += 1;
    }
    let curves = DMatrix::from_row_slice(n, d, &curves);
    let response = match task {
        Task::Regression => Response::Regression(responses.into_iter().map(|(_, v)| v).collect()),
        Task::Classification => {
            let mut labels = Vec::with_capacity(n);
            for (line, v) in responses {
                if v.fract() != 0.0 || v < 1.0 || v > usize::MAX as f64 {
                    return Err(Error::Data(format!(
                        "{}: line {line}: class label must be an integer >= 1, got {v}",
                        path.display()
                    )));
                }
                labels.push(v as usize);
            }
            Response::Classification(labels)
        }
    };
    CurveDataset::new(grid, curves, response)
}

/// Read curves for prediction: the response column is optional and ignored.
pub fn read_curves(path: &Path) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let rows = read_numeric_rows(path)?;
    let mut it = rows.into_iter();
    let (_, grid) = it
        .next()
        .ok_or_else(|| Error::Data(format!("{}: no grid row found", path.display())))?;
    let d = grid.len();
    let mut curves = Vec::new();
    let mut n = 0usize;
    for (line, row) in it {
        if row.len() != d && row.len() != d + 1 {
            return Err(Error::Data(format!(
                "{}: line {line}: expected {d} curve points (a trailing response is allowed), \
                 got {} values",
                path.display(),
                row.len()
            )));
        }
        curves.extend_from_slice(&row[..d]);
        n += 1;
    }
    Ok((grid, DMatrix::from_row_slice(n, d, &curves)))
}

/// Write a text artifact; contents use LF line endings by construction.
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
}
