use std::path::Path;

use crate::error::{IoiError, Result};
use crate::fiducial::DataSummary;

/// Reads a single-column CSV with header `value` into a known-variance summary.
pub fn ingest_csv(path: &Path, sigma2: f64) -> Result<DataSummary> {
    let io = |source| IoiError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| IoiError::Validation(format!("{}: {e}", path.display())))?
        .clone();
    if headers.len() != 1 || headers.get(0).map(str::trim) != Some("value") {
        return Err(IoiError::Validation(format!(
            "{}: expected a single column with header 'value', got {:?}",
            path.display(),
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut sum = 0.0;
    let mut n = 0u64;
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| IoiError::Parse { row, message: e.to_string() })?;
        let cell = record.get(0).unwrap_or("").trim();
        let value: f64 = cell.parse().map_err(|_| IoiError::Parse {
            row,
            message: format!("'{cell}' is not a number"),
        })?;
        if !value.is_finite() {
            return Err(IoiError::Parse {
                row,
                message: format!("'{cell}' is not finite"),
            });
        }
        sum += value;
        n += 1;
    }
    if n == 0 {
        return Err(IoiError::Validation(format!("{}: no data rows", path.display())));
    }
    DataSummary::new(sum / n as f64, n, sigma2)
}
