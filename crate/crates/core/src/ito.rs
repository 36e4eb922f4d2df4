// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Diffusive (Itô) unravelings of a Lindblad equation.
//!
//! The state obeys
//!
//! ```text
//! dψ = −i H_ψ dt ψ + Σ_k (c_k − ⟨c_k⟩) dξ_k* ψ
//! −i H_ψ = −i H − ½ Σ_k (c_k† c_k − 2⟨c_k⟩* c_k + |⟨c_k⟩|²)
//! ```
//!
//! with complex Wiener increments `dξ_j dξ_k* = δ_jk dt` and
//! `dξ_j dξ_k = u_jk dt`. The choice of `u` leaves the averaged density
//! matrix untouched but changes every higher density tensor through the
//! second-order coefficient `C`.

use log::warn;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::ensemble::{matrix_pairing, source_pairing};
use crate::error::{Error, Result};
use crate::lindblad::LindbladModel;
use crate::matrix::{dotc, matvec_into, operator_norm, projector, ComplexMatrix, StateVector, C64, I, ZERO};
use crate::rng::StreamRng;
use crate::tensor::{for_each_index, Flavor, PairTensor};
use crate::trajectory::{renormalize, run_ensemble, SdeConfig, TensorSeries, Unraveling, RATE_DT_LIMIT};

/// Eigenvalues of the real noise covariance below this are an error.
pub const COVARIANCE_TOL: f64 = 1e-10;

/// Draws `K` complex increments with the second moments set by `u`.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    k: usize,
    /// Row-major `2K × 2K` factor `L` with `L Lᵀ = [[I+Re u, Im u], [Im u, I−Re u]]`.
    factor: Vec<f64>,
}

impl NoiseSampler {
    pub fn new(u: &ComplexMatrix) -> Result<Self> {
        let k = u.nrows();
        let n = 2 * k;
        let cov = nalgebra::DMatrix::<f64>::from_fn(n, n, |a, b| {
            let (ia, ib) = (a % k, b % k);
            let (re, im) = (u[(ia, ib)].re, u[(ia, ib)].im);
            let id = if ia == ib { 1.0 } else { 0.0 };
            match (a < k, b < k) {
                (true, true) => id + re,
                (false, false) => id - re,
                _ => im,
            }
        });
        let eig = cov.symmetric_eigen();
        let mut factor = vec![0.0; n * n];
        for (col, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda < -COVARIANCE_TOL {
                return Err(Error::InvalidNoiseCorrelation(lambda));
            }
            let s = lambda.max(0.0).sqrt();
            for row in 0..n {
                factor[row * n + col] = eig.eigenvectors[(row, col)] * s;
            }
        }
        Ok(Self { k, factor })
    }

    pub fn channels(&self) -> usize {
        self.k
    }

    /// Fills `out` with `dξ_k`; `gauss` is scratch of length `2K`.
    pub fn sample_into<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R, gauss: &mut [f64], out: &mut [C64]) {
        let n = 2 * self.k;
        for g in gauss.iter_mut() {
            *g = rng.sample(StandardNormal);
        }
        let scale = (0.5 * dt).sqrt();
        for (kk, o) in out.iter_mut().enumerate() {
            let row = |r: usize| -> f64 {
                self.factor[r * n..(r + 1) * n]
                    .iter()
                    .zip(gauss.iter())
                    .map(|(f, g)| f * g)
                    .sum()
            };
            *o = C64::new(row(kk), row(kk + self.k)) * scale;
        }
    }
}

/// `K` complex Wiener increments over `dt` with correlation matrix `u`.
pub fn sample_wiener_increments<R: Rng + ?Sized>(u: &ComplexMatrix, dt: f64, rng: &mut R) -> Result<Vec<C64>> {
    let sampler = NoiseSampler::new(u)?;
    let mut gauss = vec![0.0; 2 * sampler.k];
    let mut out = vec![ZERO; sampler.k];
    sampler.sample_into(dt, rng, &mut gauss, &mut out);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ItoUnraveling {
    model: LindbladModel,
    sampler: NoiseSampler,
    /// `−i H − ½ Σ c† c`, the state-independent part of the drift.
    base_drift: ComplexMatrix,
}

pub struct ItoWorkspace {
    c_psi: Vec<C64>,
    means: Vec<C64>,
    drift: Vec<C64>,
    gauss: Vec<f64>,
    dxi: Vec<C64>,
}

impl ItoUnraveling {
    pub fn new(model: LindbladModel) -> Result<Self> {
        let sampler = NoiseSampler::new(model.noise_correlation())?;
        let base_drift = model.hamiltonian() * (-I) - model.number_operator() * C64::new(0.5, 0.0);
        Ok(Self {
            model,
            sampler,
            base_drift,
        })
    }

    pub fn model(&self) -> &LindbladModel {
        &self.model
    }

    /// `C_{mr,pq}` as an order-2 tensor, assembled term by term:
    /// `X_k ⊗ Y_k + Y_k ⊗ X_k + u*_kl X_k ⊗ X_l + u_kl Y_k ⊗ Y_l` with
    /// `X_k = Δ_k ρ`, `Y_k = ρ Δ_k†` and `Δ_k = c_k − ⟨c_k⟩`.
    pub fn c_coefficient(&self, psi: &StateVector) -> Result<PairTensor> {
        let rho = projector(psi);
        let deltas = self.model.fluctuations(psi);
        let x: Vec<ComplexMatrix> = deltas.iter().map(|dl| dl * &rho).collect();
        let y: Vec<ComplexMatrix> = deltas.iter().map(|dl| &rho * dl.adjoint()).collect();
        let u = self.model.noise_correlation();
        let d = self.model.dim();
        PairTensor::from_fn(2, d, Flavor::Classical, |ix| {
            let (m, r, p, q) = (ix[0], ix[1], ix[2], ix[3]);
            let mut acc = ZERO;
            for k in 0..x.len() {
                acc += x[k][(m, r)] * y[k][(p, q)] + y[k][(m, r)] * x[k][(p, q)];
                for l in 0..x.len() {
                    acc += x[k][(m, r)] * x[l][(p, q)] * u[(k, l)].conj()
                        + y[k][(m, r)] * y[l][(p, q)] * u[(k, l)];
                }
            }
            acc
        })
    }

    /// The same coefficient rearranged through the rate operator `W`:
    /// `W_mq ρ_pr + W_pr ρ_mq + u*_kl (X_k)_mq (X_l)_pr + u_kl (Y_k)_pr (Y_l)_mq`.
    pub fn c_coefficient_via_rate(&self, psi: &StateVector) -> Result<PairTensor> {
        let rho = projector(psi);
        let w = self.model.transition_rate_operator(psi)?;
        let deltas = self.model.fluctuations(psi);
        let x: Vec<ComplexMatrix> = deltas.iter().map(|dl| dl * &rho).collect();
        let y: Vec<ComplexMatrix> = deltas.iter().map(|dl| &rho * dl.adjoint()).collect();
        let u = self.model.noise_correlation();
        PairTensor::from_fn(2, self.model.dim(), Flavor::Classical, |ix| {
            let (m, r, p, q) = (ix[0], ix[1], ix[2], ix[3]);
            let mut acc = w[(m, q)] * rho[(p, r)] + w[(p, r)] * rho[(m, q)];
            for k in 0..x.len() {
                for l in 0..x.len() {
                    acc += x[k][(m, q)] * x[l][(p, r)] * u[(k, l)].conj()
                        + y[k][(p, r)] * y[l][(m, q)] * u[(k, l)];
                }
            }
            acc
        })
    }

    /// Per-state integrand of the order-`n` hierarchy drift:
    /// `Σ_ℓ ρ…(Lρ)_ℓ…ρ + Σ_{ℓ<m} ρ…C_{ℓm}…ρ`.
    pub fn hierarchy_drift(&self, psi: &StateVector, n: usize) -> Result<PairTensor> {
        let rho = projector(psi);
        let l_rho = self.model.rhs(&rho)?;
        let c = self.c_coefficient(psi)?;
        let d = self.model.dim();
        PairTensor::from_fn(n, d, Flavor::Classical, |ix| {
            let r = |s: usize| rho[(ix[2 * s], ix[2 * s + 1])];
            let mut acc = ZERO;
            for l in 0..n {
                let rest: C64 = (0..n).filter(|&s| s != l).map(r).product();
                acc += l_rho[(ix[2 * l], ix[2 * l + 1])] * rest;
                for m in l + 1..n {
                    let rest: C64 = (0..n).filter(|&s| s != l && s != m).map(r).product();
                    acc += c.get(&[ix[2 * l], ix[2 * l + 1], ix[2 * m], ix[2 * m + 1]]) * rest;
                }
            }
            acc
        })
    }

    /// Per-state integrand of the generating-function drift,
    /// `(a·Lρ + ½ a a C) e^{a·ρ}`.
    pub fn generating_drift(&self, psi: &StateVector, a: &ComplexMatrix) -> Result<C64> {
        let rho = projector(psi);
        let l_rho = self.model.rhs(&rho)?;
        let c = self.c_coefficient(psi)?;
        let d = self.model.dim();
        let mut quad = ZERO;
        for_each_index(4, d, |flat, ix| {
            quad += a[(ix[0], ix[1])] * a[(ix[2], ix[3])] * c.entries()[flat];
        });
        Ok((matrix_pairing(&l_rho, a) + quad * 0.5) * source_pairing(psi, a).exp())
    }

    /// Simulates `cfg.n_traj` trajectories and estimates tensors of orders
    /// `1..=max_order`.
    pub fn run_ensemble(&self, psi0: &StateVector, cfg: &SdeConfig, max_order: usize) -> Result<TensorSeries> {
        let rate = operator_norm(self.model.number_operator());
        if rate * cfg.dt > RATE_DT_LIMIT {
            warn!("dt = {} is large for Lindblad rate scale {rate}", cfg.dt);
        }
        run_ensemble(self, psi0, cfg, "ito", max_order)
    }
}

impl Unraveling for ItoUnraveling {
    type Workspace = ItoWorkspace;

    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn workspace(&self) -> ItoWorkspace {
        let d = self.model.dim();
        let k = self.model.lindblads().len();
        ItoWorkspace {
            c_psi: vec![ZERO; k * d],
            means: vec![ZERO; k],
            drift: vec![ZERO; d],
            gauss: vec![0.0; 2 * k],
            dxi: vec![ZERO; k],
        }
    }

    fn step(&self, psi: &mut [C64], dt: f64, renorm: bool, rng: &mut StreamRng, ws: &mut ItoWorkspace) -> Result<()> {
        let d = psi.len();
        for (k, c) in self.model.lindblads().iter().enumerate() {
            let out = &mut ws.c_psi[k * d..(k + 1) * d];
            matvec_into(c, psi, out);
            ws.means[k] = dotc(psi, out);
        }
        matvec_into(&self.base_drift, psi, &mut ws.drift);
        let shift: f64 = ws.means.iter().map(|m| m.norm_sqr()).sum::<f64>() * 0.5;
        self.sampler.sample_into(dt, rng, &mut ws.gauss, &mut ws.dxi);
        for i in 0..d {
            let mut drift = ws.drift[i] - psi[i] * shift;
            let mut noise = ZERO;
            for k in 0..ws.means.len() {
                let cp = ws.c_psi[k * d + i];
                drift += ws.means[k].conj() * cp;
                noise += (cp - ws.means[k] * psi[i]) * ws.dxi[k].conj();
            }
            ws.drift[i] = drift * dt + noise;
        }
        psi.iter_mut().zip(&ws.drift).for_each(|(p, dp)| *p += dp);
        if renorm {
            renormalize(psi);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{basis_state, c, max_abs_diff, random_hermitian, random_matrix, random_state, sigma_z, zeros};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plus() -> StateVector {
        (basis_state(2, 0) + basis_state(2, 1)).unscale(2f64.sqrt())
    }

    fn random_u(rng: &mut ChaCha8Rng, k: usize) -> ComplexMatrix {
        let g = random_matrix(rng, k, k);
        let s = (&g + g.transpose()) * c(0.5, 0.0);
        let norm = operator_norm(&s);
        s * c(0.9 / norm, 0.0)
    }

    #[test]
    fn coefficient_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let u = random_u(&mut rng, 2);
            let model = LindbladModel::new(
                random_hermitian(&mut rng, 3),
                vec![random_matrix(&mut rng, 3, 3), random_matrix(&mut rng, 3, 3)],
                u,
            )
            .unwrap();
            let ito = ItoUnraveling::new(model).unwrap();
            let psi = random_state(&mut rng, 3);
            let a = ito.c_coefficient(&psi).unwrap();
            let b = ito.c_coefficient_via_rate(&psi).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-10);
            assert!(a.max_abs_diff(&a.permute_slots(&[1, 0]).unwrap()) < 1e-12);
            for slot in 0..2 {
                assert!(a.contract_trace(slot).unwrap().max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn real_and_imaginary_rephasings() {
        let a = sigma_z();
        let psi = plus();
        let rho = projector(&psi);
        let real = ItoUnraveling::new(LindbladModel::with_real_noise(zeros(2), vec![a.clone()]).unwrap()).unwrap();
        let imag = ItoUnraveling::new(LindbladModel::with_real_noise(zeros(2), vec![&a * I]).unwrap()).unwrap();
        let dc = crate::matrix::commutator(&rho, &crate::matrix::commutator(&rho, &a));
        let expect_real = PairTensor::outer_product(&[dc.clone(), dc], Flavor::Classical).unwrap();
        assert!(real.c_coefficient(&psi).unwrap().max_abs_diff(&expect_real) < 1e-14);
        let ca = crate::matrix::commutator(&a, &rho);
        let mut expect_imag = PairTensor::outer_product(&[ca.clone(), ca], Flavor::Classical).unwrap();
        expect_imag.scale(c(-1.0, 0.0));
        assert!(imag.c_coefficient(&psi).unwrap().max_abs_diff(&expect_imag) < 1e-14);
        // the order-1 drift is the same, the order-2 drift differs
        let r1 = real.hierarchy_drift(&psi, 1).unwrap();
        let i1 = imag.hierarchy_drift(&psi, 1).unwrap();
        assert!(r1.max_abs_diff(&i1) < 1e-14);
        let r2 = real.hierarchy_drift(&psi, 2).unwrap();
        let i2 = imag.hierarchy_drift(&psi, 2).unwrap();
        assert!(r2.max_abs_diff(&i2) > 0.1);
    }

    #[test]
    fn eigenstates_are_fixed_points() {
        let ito = ItoUnraveling::new(LindbladModel::with_isotropic_noise(zeros(2), vec![sigma_z()]).unwrap()).unwrap();
        let psi = basis_state(2, 1);
        assert!(ito.c_coefficient(&psi).unwrap().max_abs() < 1e-15);
        let mut rng = crate::rng::stream(1, "t", 0);
        let mut ws = ito.workspace();
        let mut v: Vec<C64> = psi.iter().cloned().collect();
        for _ in 0..100 {
            ito.step(&mut v, 0.01, false, &mut rng, &mut ws).unwrap();
        }
        assert!((v[1] - c(1.0, 0.0)).norm() < 1e-14 && v[0].norm() < 1e-14);
    }

    #[test]
    fn first_order_drift_is_lindblad() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = LindbladModel::new(random_hermitian(&mut rng, 2), vec![random_matrix(&mut rng, 2, 2)], random_u(&mut rng, 1)).unwrap();
        let ito = ItoUnraveling::new(model.clone()).unwrap();
        let psi = random_state(&mut rng, 2);
        let drift = ito.hierarchy_drift(&psi, 1).unwrap().to_matrix().unwrap();
        assert!(max_abs_diff(&drift, &model.rhs(&projector(&psi)).unwrap()) < 1e-14);
    }

    #[test]
    fn real_noise_has_no_imaginary_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = ComplexMatrix::identity(1, 1);
        for _ in 0..10 {
            let dxi = sample_wiener_increments(&u, 0.01, &mut rng).unwrap();
            assert_eq!(dxi[0].im, 0.0);
        }
        let bad = ComplexMatrix::from_element(1, 1, c(2.0, 0.0));
        assert!(matches!(NoiseSampler::new(&bad), Err(Error::InvalidNoiseCorrelation(_))));
    }

    #[test]
    fn closed_system_step() {
        let h = crate::matrix::sigma_x();
        let ito = ItoUnraveling::new(LindbladModel::with_isotropic_noise(h.clone(), vec![zeros(2)]).unwrap()).unwrap();
        let psi0 = basis_state(2, 0);
        let mut v: Vec<C64> = psi0.iter().cloned().collect();
        let mut rng = crate::rng::stream(1, "t", 0);
        let mut ws = ito.workspace();
        let dt = 1e-3;
        ito.step(&mut v, dt, false, &mut rng, &mut ws).unwrap();
        let expect = &psi0 - (&h * &psi0) * (I * dt);
        assert!((StateVector::from_vec(v.clone()) - expect).norm() < 1e-15);
        assert!((crate::matrix::norm_sqr(&v) - 1.0).abs() <= dt * dt * 1.01);
    }
}
