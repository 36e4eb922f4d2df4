// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! File formats: complex matrices as nested `[re, im]` arrays, time-series
//! CSV at full double precision, and the check report.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, StateVector, C64};

/// Row-major matrix of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<ComplexMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    let mut out = ComplexMatrix::zeros(n, m);
    for (i, row) in rows.iter().enumerate() {
        for (j, &[re, im]) in row.iter().enumerate() {
            if !(re.is_finite() && im.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite entry at ({i}, {j})")));
            }
            out[(i, j)] = C64::new(re, im);
        }
    }
    Ok(out)
}

pub fn vector_to_json(v: &StateVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_json(v: &[[f64; 2]]) -> StateVector {
    StateVector::from_iterator(v.len(), v.iter().map(|&[re, im]| C64::new(re, im)))
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column-oriented CSV table.
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// One row of the check report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckRecord {
    pub check: String,
    pub module: String,
    /// Name of the identity or law being checked.
    pub paper_ref: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(check: &str, module: &str, identity: &str, value: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            module: module.into(),
            paper_ref: identity.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }

    /// Passes when `value ≥ tolerance`.
    pub fn at_least(check: &str, module: &str, identity: &str, value: f64, tolerance: f64) -> Self {
        Self {
            pass: value >= tolerance,
            ..Self::at_most(check, module, identity, value, tolerance)
        }
    }
}
