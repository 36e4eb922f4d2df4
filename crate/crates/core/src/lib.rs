// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Density tensor hierarchies for open quantum systems.
//!
//! The order-`n` density tensor generalizes the reduced density matrix to
//! products of `n` density-matrix elements. Two flavors are supported:
//!
//! * classical noise: ensemble averages `E[ρ_{i₁j₁}…ρ_{iₙjₙ}]` over pure
//!   states ([`ensemble`], [`spin`], [`ito`], [`jump`]);
//! * quantum noise: environment traces `Tr_E ρ_{i₁j₁}…ρ_{iₙjₙ}` of system
//!   blocks of a bipartite state ([`qtensor`], [`master`]).
//!
//! Both obey descent relations under index contraction, which the crate
//! checks numerically throughout.

pub mod error;
pub mod matrix;
pub mod tensor;
pub mod rng;
pub mod stats;
pub mod quadrature;
pub mod ensemble;
pub mod spin;
pub mod lindblad;
pub mod trajectory;
pub mod ito;
pub mod jump;
pub mod qtensor;
pub mod master;
pub mod reduction;
pub mod io;

pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, StateVector, C64};
pub use tensor::{Flavor, PairTensor};
