// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Collected artifacts of one run and the check report.

use std::fs;
use std::path::Path;

use noisetensor::io::{write_atomic, CheckRecord, CsvTable};
use serde::Serialize;

use crate::error::CliError;

/// Name of the check report inside the output directory.
pub const CHECKS_FILE: &str = "checks.json";

#[derive(Debug, Clone, Default)]
pub struct Report {
    files: Vec<(String, String)>,
    checks: Vec<CheckRecord>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn csv(&mut self, name: &str, table: &CsvTable) {
        self.text(name, table.render());
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(noisetensor::Error::from)?;
        s.push('\n');
        self.text(name, s);
        Ok(())
    }

    /// Single-line JSON, for large tensor snapshots.
    pub fn json_compact<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string(value).map_err(noisetensor::Error::from)?;
        s.push('\n');
        self.text(name, s);
        Ok(())
    }

    pub fn check(&mut self, record: CheckRecord) {
        self.checks.push(record);
    }

    pub fn checks(&self) -> &[CheckRecord] {
        &self.checks
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn file_names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every artifact and then `checks.json`, each atomically.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Write {
            path: dir.to_path_buf(),
            source: e.into(),
        })?;
        let mut checks = serde_json::to_string_pretty(&self.checks).map_err(noisetensor::Error::from)?;
        checks.push('\n');
        let all = self.files.iter().map(|(n, c)| (n.as_str(), c)).chain([(CHECKS_FILE, &checks)]);
        for (name, contents) in all {
            let path = dir.join(name);
            write_atomic(&path, contents).map_err(|source| CliError::Write { path, source })?;
        }
        Ok(())
    }
}
