// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("slot {slot} out of range for an order-{order} tensor")]
    SlotOutOfRange { slot: usize, order: usize },

    #[error("an order-{0} tensor has no pair to contract")]
    OrderTooSmall(usize),

    #[error("slots {from} and {to} are not cyclically adjacent in an order-{order} quantum tensor")]
    NonAdjacentSlots { from: usize, to: usize, order: usize },

    #[error("{entries} tensor entries exceed the memory budget of {budget_bytes} bytes")]
    BudgetExceeded { entries: u128, budget_bytes: u64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ensemble has no members")]
    EmptyEnsemble,

    #[error("operator is not Hermitian (defect {0:e})")]
    NotHermitian(f64),

    #[error("jump channel {0} has zero rate")]
    ZeroRate(usize),

    #[error("total jump probability {0} per step is not below 1")]
    JumpProbability(f64),

    #[error("noise correlation matrix is not admissible (covariance eigenvalue {0:e})")]
    InvalidNoiseCorrelation(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),

    #[error("step size {0:e} is below the minimum step")]
    StepTooSmall(f64),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
