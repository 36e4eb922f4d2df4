// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Density-tensor generators of weak-coupling master equations.
//!
//! In the weak-coupling limit the time derivative of the order-`n` quantum
//! tensor is a sum of slot-wise outer products built from the reduced
//! density matrix. [`ProductExpansion`] keeps that sum symbolic so entries
//! and contractions can be evaluated without allocating the full tensor.

pub mod born_markov;
pub mod caldeira_leggett;
pub mod collisional;
pub mod integrate;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64, ONE, ZERO};
use crate::tensor::{checked_len, Flavor, PairTensor};

pub use born_markov::{optical_rate, BornMarkov, Channel, OpticalTransition, QuantumOptical};
pub use caldeira_leggett::CaldeiraLeggett;
pub use collisional::{Collisional, KernelQuadrature, MomentumDistribution, ScatteringModel};
pub use integrate::{integrate_hierarchy, HierarchySeries, RkConfig};

/// `Σ_t X_{t,1} ⊗ X_{t,2} ⊗ … ⊗ X_{t,n}` over terms `t`.
#[derive(Debug, Clone)]
pub struct ProductExpansion {
    order: usize,
    dim: usize,
    terms: Vec<Vec<ComplexMatrix>>,
}

impl ProductExpansion {
    pub fn new(order: usize, dim: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::OrderTooSmall(0));
        }
        Ok(Self {
            order,
            dim,
            terms: Vec::new(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Vec<ComplexMatrix>] {
        &self.terms
    }

    pub fn push(&mut self, factors: Vec<ComplexMatrix>) {
        debug_assert_eq!(factors.len(), self.order);
        self.terms.push(factors);
    }

    /// Adds the term with slot `l` replaced by `x` and slot `k ≠ l` taken
    /// from `base`.
    pub fn push_slot(&mut self, base: &[ComplexMatrix], l: usize, x: ComplexMatrix) {
        let mut f = base.to_vec();
        f[l] = x;
        self.push(f);
    }

    /// Adds the term with slots `l` and `m` replaced by `x` and `y`.
    pub fn push_pair(&mut self, base: &[ComplexMatrix], l: usize, x: ComplexMatrix, m: usize, y: ComplexMatrix) {
        let mut f = base.to_vec();
        f[l] = x;
        f[m] = y;
        self.push(f);
    }

    /// Entry at the multi-index `(i₁, j₁, …, iₙ, jₙ)`.
    pub fn entry(&self, idx: &[usize]) -> C64 {
        self.terms
            .iter()
            .map(|t| t.iter().enumerate().map(|(l, m)| m[(idx[2 * l], idx[2 * l + 1])]).product::<C64>())
            .sum()
    }

    pub fn to_tensor(&self) -> Result<PairTensor> {
        let mut out = PairTensor::zeros(self.order, self.dim, Flavor::Quantum)?;
        for t in &self.terms {
            out.axpy(ONE, &PairTensor::outer_product(t, Flavor::Quantum)?)?;
        }
        Ok(out)
    }

    /// Order-1 expansion as a matrix.
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.order != 1 {
            return Err(Error::InvalidInput(format!("order {} expansion is not a matrix", self.order)));
        }
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for t in &self.terms {
            out += &t[0];
        }
        Ok(out)
    }

    /// Largest entrywise deviation between the adjacent chain contraction
    /// `Σ_k T[…, i_from k, …, k j_to, …]` (merged pair at the lower slot
    /// position, matching [`PairTensor::contract_chain`]) and `lower`.
    pub fn chain_descent_defect(&self, from: usize, to: usize, lower: &ProductExpansion) -> Result<f64> {
        let n = self.order;
        if n < 2 || lower.order != n - 1 || lower.dim != self.dim {
            return Err(Error::DimensionMismatch("lower expansion must have order n − 1".into()));
        }
        if from >= n || to >= n {
            return Err(Error::SlotOutOfRange {
                slot: from.max(to),
                order: n,
            });
        }
        if to != (from + 1) % n {
            return Err(Error::NonAdjacentSlots { from, to, order: n });
        }
        let d = self.dim;
        let len = checked_len(n - 1, d)?;
        let (keep, drop) = (from.min(to), from.max(to));
        let defect = (0..len)
            .into_par_iter()
            .map(|flat| {
                let lo = decode(flat, 2 * (n - 1), d);
                let mut up = vec![0; 2 * n];
                let mut src = 0;
                for slot in 0..n {
                    if slot == drop {
                        continue;
                    }
                    up[2 * slot] = lo[2 * src];
                    up[2 * slot + 1] = lo[2 * src + 1];
                    src += 1;
                }
                // the merged lower pair is (i_from, j_to)
                up[2 * from] = lo[2 * position_after_drop(keep, drop)];
                up[2 * to + 1] = lo[2 * position_after_drop(keep, drop) + 1];
                let mut sum = ZERO;
                for k in 0..d {
                    up[2 * from + 1] = k;
                    up[2 * to] = k;
                    sum += self.entry(&up);
                }
                (sum - lower.entry(&lo)).norm()
            })
            .reduce(|| 0.0, f64::max);
        Ok(defect)
    }
}

fn position_after_drop(keep: usize, drop: usize) -> usize {
    if keep < drop {
        keep
    } else {
        keep - 1
    }
}

fn decode(mut flat: usize, positions: usize, dim: usize) -> Vec<usize> {
    let mut idx = vec![0; positions];
    for p in (0..positions).rev() {
        idx[p] = flat % dim;
        flat /= dim;
    }
    idx
}

/// A weak-coupling hierarchy generator: the order-`n` drift as a function
/// of the per-slot reduced density matrices.
pub trait Generator: Sync {
    fn dim(&self) -> usize;

    /// Drift with slot `ℓ` built from `slots[ℓ]`; `slots.len()` is the order.
    fn expansion(&self, slots: &[ComplexMatrix]) -> Result<ProductExpansion>;

    /// Order-`n` drift at `ρ⁽¹⁾ = rho`.
    fn drift(&self, rho: &ComplexMatrix, n: usize) -> Result<PairTensor> {
        self.expansion(&vec![rho.clone(); n])?.to_tensor()
    }

    /// Right-hand side of the closed reduced-density-matrix equation.
    fn first_order(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.expansion(std::slice::from_ref(rho))?.to_matrix()
    }

    fn check_slots(&self, slots: &[ComplexMatrix]) -> Result<()> {
        if slots.is_empty() {
            return Err(Error::OrderTooSmall(0));
        }
        let d = self.dim();
        if slots.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::DimensionMismatch(format!("slot matrices must be {d}×{d}")));
        }
        Ok(())
    }
}

/// Deviation between the chain contraction `from → from+1` of the order-`n`
/// drift at `ρ` and the order-`(n−1)` drift with the merged slot's `ρ`
/// replaced by `ρ²`.
pub fn descent_defect<G: Generator + ?Sized>(gen: &G, rho: &ComplexMatrix, n: usize, from: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::OrderTooSmall(n));
    }
    let to = (from + 1) % n;
    let upper = gen.expansion(&vec![rho.clone(); n])?;
    let mut slots = vec![rho.clone(); n - 1];
    slots[position_after_drop(from.min(to), from.max(to))] = rho * rho;
    let lower = gen.expansion(&slots)?;
    upper.chain_descent_defect(from, to, &lower)
}

/// Serialized master-equation specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MasterSpec {
    BornMarkov(born_markov::BornMarkovJson),
    QuantumOptical(born_markov::QuantumOpticalJson),
    CaldeiraLeggett(caldeira_leggett::CaldeiraLeggettJson),
    Collisional(collisional::CollisionalJson),
}

/// A parsed specification with a generator behind it, or the collisional
/// closed form.
pub enum MasterModel {
    Generator(Box<dyn Generator + Send>),
    Collisional(Collisional),
}

impl MasterSpec {
    pub fn build(&self) -> Result<MasterModel> {
        Ok(match self {
            MasterSpec::BornMarkov(j) => MasterModel::Generator(Box::new(BornMarkov::from_json(j)?)),
            MasterSpec::QuantumOptical(j) => MasterModel::Generator(Box::new(QuantumOptical::from_json(j)?.to_born_markov()?)),
            MasterSpec::CaldeiraLeggett(j) => MasterModel::Generator(Box::new(CaldeiraLeggett::from_json(j)?)),
            MasterSpec::Collisional(j) => MasterModel::Collisional(Collisional::from_json(j)?),
        })
    }
}
