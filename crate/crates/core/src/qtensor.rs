// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Quantum-noise density tensors built from explicit system ⊗ environment
//! states.
//!
//! A bipartite density matrix is stored environment-major (`|e, i⟩` has flat
//! index `e·d_S + i`). Its system block `B_ij` is the environment operator
//! `⟨· i|ρ|· j⟩`, and the order-`n` quantum tensor has entries
//! `Tr_E B_{i₁j₁} B_{i₂j₂} … B_{iₙjₙ}`.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{matrix_from_json, matrix_to_json, MatrixJson};
use crate::matrix::{
    commutator, kron, max_abs, trace_product, validate_density_matrix, ComplexMatrix, StateVector, C64, DEFAULT_TOL,
    I, ONE, ZERO,
};
use crate::tensor::{checked_len, Flavor, PairTensor};

/// A density matrix on `H_E ⊗ H_S`.
#[derive(Debug, Clone)]
pub struct BipartiteState {
    d_env: usize,
    d_sys: usize,
    rho: ComplexMatrix,
    pure: bool,
}

impl BipartiteState {
    /// Validates Hermiticity, unit trace and positivity; a state flagged
    /// pure must also satisfy `Tr ρ² = 1`.
    pub fn new(d_env: usize, d_sys: usize, rho: ComplexMatrix, pure: bool) -> Result<Self> {
        let d = d_env * d_sys;
        if d == 0 || rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "rho must be {d}×{d} for d_E = {d_env}, d_S = {d_sys}"
            )));
        }
        validate_density_matrix(&rho, DEFAULT_TOL)?;
        if pure {
            let purity = trace_product(&rho, &rho).re;
            if (purity - 1.0).abs() > DEFAULT_TOL {
                return Err(Error::InvalidInput(format!("state flagged pure has Tr ρ² = {purity}")));
            }
        }
        Ok(Self { d_env, d_sys, rho, pure })
    }

    /// `|Ψ⟩⟨Ψ|` with `Ψ` indexed `e·d_S + i`.
    pub fn from_pure(d_env: usize, d_sys: usize, psi: &StateVector) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("state norm {norm} is not 1")));
        }
        Self::new(d_env, d_sys, psi * psi.adjoint(), true)
    }

    /// `ρ_E ⊗ ρ_S`.
    pub fn product(rho_env: &ComplexMatrix, rho_sys: &ComplexMatrix) -> Result<Self> {
        let rho = kron(rho_env, rho_sys);
        let pure = (trace_product(&rho, &rho).re - 1.0).abs() <= DEFAULT_TOL;
        Self::new(rho_env.nrows(), rho_sys.nrows(), rho, pure)
    }

    /// `(|00⟩ + |11⟩)/√2` on two qubits.
    pub fn bell() -> Self {
        let s = 0.5f64.sqrt();
        let psi = StateVector::from_vec(vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]);
        Self::from_pure(2, 2, &psi).expect("Bell state is valid")
    }

    pub fn env_dim(&self) -> usize {
        self.d_env
    }

    pub fn sys_dim(&self) -> usize {
        self.d_sys
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn is_pure(&self) -> bool {
        self.pure
    }

    /// `(B_ij)_{e₁e₂} = ⟨e₁ i|ρ|e₂ j⟩`.
    pub fn system_block(&self, i: usize, j: usize) -> Result<ComplexMatrix> {
        if i >= self.d_sys || j >= self.d_sys {
            return Err(Error::InvalidInput(format!(
                "system index ({i}, {j}) out of range for d_S = {}",
                self.d_sys
            )));
        }
        let ds = self.d_sys;
        Ok(ComplexMatrix::from_fn(self.d_env, self.d_env, |a, b| self.rho[(a * ds + i, b * ds + j)]))
    }

    /// All blocks, indexed by the pair code `i·d_S + j`.
    pub fn blocks(&self) -> Vec<ComplexMatrix> {
        let ds = self.d_sys;
        (0..ds * ds)
            .map(|code| self.system_block(code / ds, code % ds).expect("in range"))
            .collect()
    }

    /// `Tr_E ρ`.
    pub fn reduced_system(&self) -> ComplexMatrix {
        let ds = self.d_sys;
        ComplexMatrix::from_fn(ds, ds, |i, j| {
            (0..self.d_env).map(|e| self.rho[(e * ds + i, e * ds + j)]).sum()
        })
    }

    /// `ρ_E = Tr_S ρ = Σ_i B_ii`.
    pub fn reduced_environment(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.d_env, self.d_env);
        for i in 0..self.d_sys {
            out += self.system_block(i, i).expect("in range");
        }
        out
    }

    /// `A_E = Tr_S ρ A_S = Σ_ij B_ij (A_S)_ji`.
    pub fn environment_operator(&self, a_sys: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_system_op(a_sys)?;
        let mut out = ComplexMatrix::zeros(self.d_env, self.d_env);
        for i in 0..self.d_sys {
            for j in 0..self.d_sys {
                out += self.system_block(i, j)? * a_sys[(j, i)];
            }
        }
        Ok(out)
    }

    /// Order-`n` quantum tensor `Tr_E B_{i₁j₁} … B_{iₙjₙ}`.
    pub fn trace_tensor(&self, n: usize) -> Result<PairTensor> {
        if n == 0 {
            return Err(Error::OrderTooSmall(0));
        }
        let len = checked_len(n, self.d_sys)?;
        let de = self.d_env as u128;
        let work = de * de * (len as u128) * 16;
        if work > crate::tensor::budget_bytes() as u128 {
            return Err(Error::BudgetExceeded {
                entries: de * de * len as u128,
                budget_bytes: crate::tensor::budget_bytes(),
            });
        }
        let blocks = self.blocks();
        let codes = blocks.len();
        let chunk = len / codes;
        let mut entries = vec![ZERO; len];
        entries.par_chunks_mut(chunk).enumerate().for_each(|(first, out)| {
            fill_traces(&blocks, &blocks[first], n - 1, out);
        });
        PairTensor::from_entries(n, self.d_sys, Flavor::Quantum, entries)
    }

    /// `Tr_E ρ_E A_E² − (Tr_E ρ_E A_E)²`.
    pub fn environment_fluctuation(&self, a_sys: &ComplexMatrix) -> Result<f64> {
        if !self.pure {
            warn!("environment fluctuation of a mixed state: the order-3 contraction form does not apply");
        }
        let rho_e = self.reduced_environment();
        let a_e = self.environment_operator(a_sys)?;
        let mean = trace_product(&rho_e, &a_e);
        Ok((trace_product(&rho_e, &(&a_e * &a_e)) - mean * mean).re)
    }

    /// The same fluctuation written as contractions of the order-3 symmetric
    /// part and the order-2 tensor.
    pub fn environment_fluctuation_from_tensors(&self, a_sys: &ComplexMatrix) -> Result<f64> {
        self.check_system_op(a_sys)?;
        let id = ComplexMatrix::identity(self.d_sys, self.d_sys);
        let third = self.trace_tensor(3)?.symmetric_part();
        let second = self.trace_tensor(2)?;
        let sq = third.contract_with(&[id.clone(), a_sys.clone(), a_sys.clone()])?;
        let mean = second.contract_with(&[id, a_sys.clone()])?;
        Ok((sq - mean * mean).re)
    }

    fn check_system_op(&self, a: &ComplexMatrix) -> Result<()> {
        if a.nrows() != self.d_sys || a.ncols() != self.d_sys {
            return Err(Error::DimensionMismatch(format!("system operator must be {0}×{0}", self.d_sys)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> BipartiteJson {
        BipartiteJson {
            d_env: self.d_env,
            d_sys: self.d_sys,
            rho: matrix_to_json(&self.rho),
            pure: self.pure,
        }
    }

    pub fn from_json(json: &BipartiteJson) -> Result<Self> {
        Self::new(json.d_env, json.d_sys, matrix_from_json(&json.rho)?, json.pure)
    }
}

/// Writes `Tr(prefix · B_{c₁} ⋯ B_{c_depth})` for all code strings, in
/// row-major code order.
fn fill_traces(blocks: &[ComplexMatrix], prefix: &ComplexMatrix, depth: usize, out: &mut [C64]) {
    if depth == 0 {
        out[0] = prefix.trace();
        return;
    }
    let chunk = out.len() / blocks.len();
    for (b, slot) in blocks.iter().zip(out.chunks_mut(chunk)) {
        if depth == 1 {
            slot[0] = trace_product(prefix, b);
        } else {
            fill_traces(blocks, &(prefix * b), depth - 1, slot);
        }
    }
}

/// Serialized bipartite state `{dE, dS, rho, pure}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BipartiteJson {
    #[serde(rename = "dE")]
    pub d_env: usize,
    #[serde(rename = "dS")]
    pub d_sys: usize,
    pub rho: MatrixJson,
    #[serde(default)]
    pub pure: bool,
}

/// Mixture `Σ_α w_α ρ_α` of bipartite states.
#[derive(Debug, Clone)]
pub struct StateFamily {
    members: Vec<(f64, BipartiteState)>,
}

impl StateFamily {
    pub fn new(members: Vec<(f64, BipartiteState)>) -> Result<Self> {
        let Some((_, first)) = members.first() else {
            return Err(Error::EmptyEnsemble);
        };
        let (de, ds) = (first.d_env, first.d_sys);
        if members.iter().any(|(_, s)| s.d_env != de || s.d_sys != ds) {
            return Err(Error::DimensionMismatch("family members differ in dimensions".into()));
        }
        if members.iter().any(|(w, _)| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput("weights must be nonnegative".into()));
        }
        let total: f64 = members.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > crate::ensemble::WEIGHT_SUM_TOL {
            return Err(Error::InvalidInput(format!("weights sum to {total}")));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[(f64, BipartiteState)] {
        &self.members
    }

    /// `Σ_α w_α Tr_E ρ_{α;i₁j₁} ⋯ ρ_{α;iₙjₙ}`.
    pub fn mixed_trace_tensor(&self, n: usize) -> Result<PairTensor> {
        let ds = self.members[0].1.d_sys;
        let mut out = PairTensor::zeros(n, ds, Flavor::Quantum)?;
        for (w, s) in &self.members {
            out.axpy(C64::new(*w, 0.0), &s.trace_tensor(n)?)?;
        }
        Ok(out)
    }

    /// `Σ_α w_α Π_ℓ (Tr_E ρ_α)_{iℓjℓ}`, the classical-noise analogue.
    pub fn classical_variant(&self, n: usize) -> Result<PairTensor> {
        let ds = self.members[0].1.d_sys;
        let mut out = PairTensor::zeros(n, ds, Flavor::Classical)?;
        for (w, s) in &self.members {
            let r = s.reduced_system();
            out.axpy(C64::new(*w, 0.0), &PairTensor::outer_product(&vec![r; n], Flavor::Classical)?)?;
        }
        Ok(out)
    }
}

/// Tolerance on the pointer-observable commutation conditions.
pub const POINTER_TOL: f64 = 1e-10;

/// Rate of change of `Var(A)` under `H_S + H_E + H_int` for a pointer
/// observable `A` commuting with the environment and interaction terms:
/// `i Tr ρ⁽¹⁾[H_S, A²] − 2i (Tr ρ⁽¹⁾A)(Tr ρ⁽¹⁾[H_S, A])`.
pub fn pointer_variance_rate(
    state: &BipartiteState,
    h_sys: &ComplexMatrix,
    h_env: &ComplexMatrix,
    h_int: &ComplexMatrix,
    a: &ComplexMatrix,
) -> Result<f64> {
    let (de, ds) = (state.d_env, state.d_sys);
    let square = |m: &ComplexMatrix, d: usize, name: &str| {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch(format!("{name} must be {d}×{d}")));
        }
        Ok(())
    };
    square(h_sys, ds, "H_S")?;
    square(a, ds, "A")?;
    square(h_env, de, "H_E")?;
    square(h_int, de * ds, "H_int")?;
    let a_full = kron(&ComplexMatrix::identity(de, de), a);
    let env_full = kron(h_env, &ComplexMatrix::identity(ds, ds));
    let env_defect = max_abs(&commutator(&a_full, &env_full));
    let int_defect = max_abs(&commutator(&a_full, h_int));
    if env_defect > POINTER_TOL || int_defect > POINTER_TOL {
        return Err(Error::Precondition(format!(
            "A must commute with H_E and H_int (defects {env_defect:.3e}, {int_defect:.3e})"
        )));
    }
    let r = state.reduced_system();
    let a2 = a * a;
    let first = trace_product(&r, &commutator(h_sys, &a2));
    let mean = trace_product(&r, a);
    let second = trace_product(&r, &commutator(h_sys, a));
    Ok((I * first - I * 2.0 * mean * second).re)
}

/// `Var(A)` of the system marginal.
pub fn pointer_variance(state: &BipartiteState, a: &ComplexMatrix) -> f64 {
    let r = state.reduced_system();
    let mean = trace_product(&r, a);
    (trace_product(&r, &(a * a)) - mean * mean).re
}

/// `2 ΔA ΔB` with `B = i[H_S, A]`: the uncertainty bound on
/// `|d Var(A)/dt| = |⟨{A − ⟨A⟩, B − ⟨B⟩}⟩|` for a pointer observable.
pub fn pointer_rate_bound(state: &BipartiteState, h_sys: &ComplexMatrix, a: &ComplexMatrix) -> f64 {
    let b = commutator(h_sys, a) * I;
    let spread = |m: &ComplexMatrix| pointer_variance(state, m).max(0.0).sqrt();
    2.0 * spread(a) * spread(&b)
}

/// Truncated harmonic oscillator with unit frequency and mass `m`.
#[derive(Debug, Clone)]
pub struct TruncatedOscillator {
    pub dim: usize,
    pub mass: f64,
}

impl TruncatedOscillator {
    pub fn new(dim: usize, mass: f64) -> Result<Self> {
        if dim < 2 || !(mass > 0.0) {
            return Err(Error::InvalidInput("oscillator needs dim ≥ 2 and positive mass".into()));
        }
        Ok(Self { dim, mass })
    }

    /// Lowering operator `a|k⟩ = √k |k−1⟩`.
    pub fn lowering(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim, self.dim, |i, j| {
            if j == i + 1 {
                C64::new((j as f64).sqrt(), 0.0)
            } else {
                ZERO
            }
        })
    }

    /// `x = (a + a†)/√(2m)`.
    pub fn position(&self) -> ComplexMatrix {
        let a = self.lowering();
        (&a + a.adjoint()) / C64::new((2.0 * self.mass).sqrt(), 0.0)
    }

    /// `p = i√(m/2)(a† − a)`.
    pub fn momentum(&self) -> ComplexMatrix {
        let a = self.lowering();
        (a.adjoint() - &a) * (I * (self.mass / 2.0).sqrt())
    }

    /// `p²/2m` in the truncated basis.
    pub fn kinetic(&self) -> ComplexMatrix {
        let p = self.momentum();
        &p * &p / C64::new(2.0 * self.mass, 0.0)
    }

    /// Normalized coherent state `e^{−|α|²/2} Σ αᵏ/√k! |k⟩`, truncated.
    pub fn coherent_state(&self, alpha: C64) -> StateVector {
        let mut psi = StateVector::zeros(self.dim);
        let mut term = ONE;
        for k in 0..self.dim {
            psi[k] = term;
            term *= alpha / ((k + 1) as f64).sqrt();
        }
        psi.unscale(psi.norm())
    }
}
