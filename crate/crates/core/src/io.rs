//! Matrix JSON: `{"n": k, "rows": [[...], ...]}`, row-major, `2k × 2k`.
//!
//! Numbers are written with 17 significant digits so that every `f64`
//! survives a write/read cycle bit for bit.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::manifold::Dim;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixJson {
    n: usize,
    rows: Vec<Vec<f64>>,
}

/// Parse and shape-check a matrix document.
pub fn matrix_from_value(value: serde_json::Value) -> Result<Mat> {
    let doc: MatrixJson =
        serde_json::from_value(value).map_err(|e| Error::MatrixJson(e.to_string()))?;
    rows_to_matrix(doc.n, &doc.rows)
}

pub fn matrix_from_json(text: &str) -> Result<Mat> {
    let doc: MatrixJson = serde_json::from_str(text).map_err(|e| Error::MatrixJson(e.to_string()))?;
    rows_to_matrix(doc.n, &doc.rows)
}

fn rows_to_matrix(n: usize, rows: &[Vec<f64>]) -> Result<Mat> {
    let dim = Dim::new(n)?.ambient();
    if rows.len() != dim {
        return Err(Error::MatrixJson(format!(
            "n = {n} needs {dim} rows, got {}",
            rows.len()
        )));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
        return Err(Error::MatrixJson(format!(
            "row {i} has {} entries, expected {dim}",
            r.len()
        )));
    }
    Ok(Mat::from_fn(dim, dim, |i, j| rows[i][j]))
}

/// Serialize a `2n × 2n` matrix. Non-finite entries are rejected.
pub fn matrix_to_json(m: &Mat) -> Result<String> {
    let n = Dim::of_matrix(m)?;
    if let Some(x) = m.iter().find(|x| !x.is_finite()) {
        return Err(Error::MatrixJson(format!("cannot write non-finite entry {x}")));
    }
    let mut out = format!("{{\"n\": {}, \"rows\": [", n.n());
    for i in 0..m.nrows() {
        out.push_str(if i == 0 { "\n  [" } else { ",\n  [" });
        for j in 0..m.ncols() {
            if j > 0 {
                out.push_str(", ");
            }
            write!(out, "{:.16e}", m[(i, j)]).expect("writing to a String cannot fail");
        }
        out.push(']');
    }
    out.push_str("\n]}\n");
    Ok(out)
}
