// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

use crate::{EXIT_BUDGET, EXIT_CONFIG};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },

    #[error("{}: field `{field}`: {message}", path.display())]
    Parse { path: PathBuf, field: String, message: String },

    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: noisetensor::Error },

    #[error(transparent)]
    Core(#[from] noisetensor::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(noisetensor::Error::BudgetExceeded { .. }) => EXIT_BUDGET,
            _ => EXIT_CONFIG,
        }
    }
}
