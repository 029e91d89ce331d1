//! Spectral response CSV: `s` rows by `S` columns of plain decimals, no
//! header. Row normalization happens in the degradation model, not here.

use std::fs;
use std::path::Path;

use hsfuse_core::linalg::Mat;

use crate::Failure;

pub fn read_srf(path: &Path) -> Result<Mat, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (field, token) in line.split(',').enumerate() {
            let v: f64 = token.trim().parse().map_err(|_| {
                Failure::Io(format!(
                    "{}: line {}, field {}: not a number: '{}'",
                    path.display(),
                    lineno + 1,
                    field + 1,
                    token.trim()
                ))
            })?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Failure::Io(format!(
                    "{}: line {} has {} fields, expected {}",
                    path.display(),
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Failure::Io(format!("{}: no data rows", path.display())));
    }
    let mut m = Mat::zeros(rows.len(), rows[0].len());
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    Ok(m)
}
