// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! High-temperature Caldeira–Leggett hierarchy generator in a truncated
//! Fock basis.
//!
//! `n = 1`: `−iγ[x, {p, ρ}] − 2mγk_BT [x, [x, ρ]]`.
//! `n ≥ 2`: each slot carries `−2mγk_BT {x², ρ} + iγ(ρpx − xpρ)` and each
//! cyclic neighbour pair carries
//! `4mγk_BT (ρx)(xρ) + iγ[(ρx)(pρ) − (ρp)(xρ)]`.
//! With `free_hamiltonian` set, `−i[p²/2m, ρ]` is added to every slot.

use serde::{Deserialize, Serialize};

use super::{Generator, ProductExpansion};
use crate::error::{Error, Result};
use crate::matrix::{anticommutator, commutator, ComplexMatrix, C64, I};
use crate::qtensor::TruncatedOscillator;

/// Smallest Fock truncation accepted.
pub const MIN_TRUNCATION: usize = 4;

#[derive(Debug, Clone)]
pub struct CaldeiraLeggett {
    pub mass: f64,
    pub gamma: f64,
    pub kt: f64,
    x: ComplexMatrix,
    p: ComplexMatrix,
    free: Option<ComplexMatrix>,
}

impl CaldeiraLeggett {
    pub fn new(dim: usize, mass: f64, gamma: f64, kt: f64, free_hamiltonian: bool) -> Result<Self> {
        if dim < MIN_TRUNCATION {
            return Err(Error::InvalidInput(format!(
                "Fock truncation {dim} is below the minimum {MIN_TRUNCATION}"
            )));
        }
        if !(gamma >= 0.0 && kt >= 0.0 && gamma.is_finite() && kt.is_finite()) {
            return Err(Error::InvalidInput("γ and k_BT must be nonnegative".into()));
        }
        let osc = TruncatedOscillator::new(dim, mass)?;
        let free = free_hamiltonian.then(|| osc.kinetic());
        Ok(Self {
            mass,
            gamma,
            kt,
            x: osc.position(),
            p: osc.momentum(),
            free,
        })
    }

    pub fn position(&self) -> &ComplexMatrix {
        &self.x
    }

    pub fn momentum(&self) -> &ComplexMatrix {
        &self.p
    }

    fn diffusion(&self) -> C64 {
        C64::new(2.0 * self.mass * self.gamma * self.kt, 0.0)
    }

    /// `iγ(ρpx − xpρ)`.
    pub fn friction_slot(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let px = &self.p * &self.x;
        let xp = &self.x * &self.p;
        (rho * px - xp * rho) * (I * self.gamma)
    }

    /// `γρ + (i/2)γ[ρ, {x, p}]`, equal to [`Self::friction_slot`] when
    /// `[x, p] = i` holds on the support of `ρ`.
    pub fn friction_slot_symmetrized(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let sym = anticommutator(&self.x, &self.p);
        rho * C64::new(self.gamma, 0.0) + commutator(rho, &sym) * (I * (0.5 * self.gamma))
    }

    /// Diffusion part of the order-2 drift only; its chain contraction must
    /// equal `−2mγk_BT[x, [x, ρ²]]` once the `ρx²ρ` terms cancel.
    pub fn diffusion_expansion(&self, rho: &ComplexMatrix) -> Result<ProductExpansion> {
        let slots = [rho.clone(), rho.clone()];
        let mut out = ProductExpansion::new(2, rho.nrows())?;
        let x2 = &self.x * &self.x;
        for l in 0..2 {
            out.push_slot(&slots, l, anticommutator(&x2, rho) * (-self.diffusion()));
            let m = 1 - l;
            out.push_pair(&slots, l, rho * &self.x * (self.diffusion() * 2.0), m, &self.x * rho);
        }
        Ok(out)
    }

    pub fn from_json(json: &CaldeiraLeggettJson) -> Result<Self> {
        Self::new(json.dim, json.mass, json.gamma, json.kt, json.free_hamiltonian)
    }

    pub fn to_json(&self) -> CaldeiraLeggettJson {
        CaldeiraLeggettJson {
            dim: self.x.nrows(),
            mass: self.mass,
            gamma: self.gamma,
            kt: self.kt,
            free_hamiltonian: self.free.is_some(),
        }
    }
}

impl Generator for CaldeiraLeggett {
    fn dim(&self) -> usize {
        self.x.nrows()
    }

    fn expansion(&self, slots: &[ComplexMatrix]) -> Result<ProductExpansion> {
        self.check_slots(slots)?;
        let n = slots.len();
        let d = self.dim();
        let mut out = ProductExpansion::new(n, d)?;
        let (x, p) = (&self.x, &self.p);
        let free = |rho: &ComplexMatrix| self.free.as_ref().map(|h| commutator(h, rho) * (-I));
        if n == 1 {
            let rho = &slots[0];
            let mut r = commutator(x, &anticommutator(p, rho)) * (-I * self.gamma)
                - commutator(x, &commutator(x, rho)) * self.diffusion();
            if let Some(f) = free(rho) {
                r += f;
            }
            out.push(vec![r]);
            return Ok(out);
        }
        let x2 = x * x;
        for (l, rho) in slots.iter().enumerate() {
            let mut r = anticommutator(&x2, rho) * (-self.diffusion()) + self.friction_slot(rho);
            if let Some(f) = free(rho) {
                r += f;
            }
            out.push_slot(slots, l, r);
        }
        let ig = I * self.gamma;
        for l in 0..n {
            let m = (l + 1) % n;
            let (a, b) = (&slots[l], &slots[m]);
            out.push_pair(slots, l, a * x * (self.diffusion() * 2.0), m, x * b);
            out.push_pair(slots, l, a * x * ig, m, p * b);
            out.push_pair(slots, l, a * p * (-ig), m, x * b);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaldeiraLeggettJson {
    pub dim: usize,
    pub mass: f64,
    pub gamma: f64,
    pub kt: f64,
    #[serde(default)]
    pub free_hamiltonian: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::master::descent_defect;
    use crate::matrix::{max_abs_diff, random_density_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(dim: usize, free: bool) -> CaldeiraLeggett {
        CaldeiraLeggett::new(dim, 1.3, 0.4, 2.1, free).unwrap()
    }

    /// Density matrix supported on the lowest `k` Fock levels.
    fn low_density(rng: &mut ChaCha8Rng, dim: usize, k: usize) -> ComplexMatrix {
        let small = random_density_matrix(rng, k);
        let mut rho = ComplexMatrix::zeros(dim, dim);
        rho.view_mut((0, 0), (k, k)).copy_from(&small);
        rho
    }

    #[test]
    fn first_order_traceless() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for free in [false, true] {
            let cl = model(8, free);
            let rho = random_density_matrix(&mut rng, 8);
            assert!(cl.first_order(&rho).unwrap().trace().norm() < 1e-10);
        }
        assert!(CaldeiraLeggett::new(3, 1.0, 1.0, 1.0, false).is_err());
    }

    #[test]
    fn descent_is_exact_in_truncation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for dim in [4, 8] {
            for free in [false, true] {
                let cl = model(dim, free);
                let rho = random_density_matrix(&mut rng, dim);
                for n in 2..=3 {
                    for from in 0..n {
                        assert!(descent_defect(&cl, &rho, n, from).unwrap() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn sandwiched_diffusion_terms_cancel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cl = model(8, false);
        let rho = random_density_matrix(&mut rng, 8);
        let sq = &rho * &rho;
        let mut target = ProductExpansion::new(1, 8).unwrap();
        target.push(vec![commutator(cl.position(), &commutator(cl.position(), &sq)) * (-cl.diffusion())]);
        let d = cl.diffusion_expansion(&rho).unwrap();
        assert!(d.chain_descent_defect(0, 1, &target).unwrap() < 1e-10);
    }

    #[test]
    fn symmetrized_friction_below_truncation_edge() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cl = model(10, false);
        let rho = low_density(&mut rng, 10, 8);
        let a = cl.friction_slot(&rho);
        let b = cl.friction_slot_symmetrized(&rho);
        assert!(max_abs_diff(&a, &b) < 1e-10);
        // at the edge the canonical commutator fails
        let full = random_density_matrix(&mut rng, 10);
        assert!(max_abs_diff(&cl.friction_slot(&full), &cl.friction_slot_symmetrized(&full)) > 1e-6);
    }

    #[test]
    fn position_damping_rate() {
        // in the eigenbasis of x the double commutator damps ρ_ab at
        // 2mγk_BT (x_a − x_b)²
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cl = model(6, false);
        let rho = random_density_matrix(&mut rng, 6);
        let x = cl.position();
        let friction = commutator(x, &anticommutator(cl.momentum(), &rho)) * (-I * cl.gamma);
        let diffusion = cl.first_order(&rho).unwrap() - friction;
        let eig = x.clone().symmetric_eigen();
        let v = &eig.eigenvectors;
        let in_x = v.adjoint() * &rho * v;
        let out = v.adjoint() * diffusion * v;
        for a in 0..6 {
            for b in 0..6 {
                let dx = eig.eigenvalues[a] - eig.eigenvalues[b];
                let rate = 2.0 * cl.mass * cl.gamma * cl.kt * dx * dx;
                assert!((out[(a, b)] + in_x[(a, b)] * rate).norm() < 1e-12);
            }
        }
    }
}
