// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Jump (piecewise deterministic) unravelings of a Lindblad equation.
//!
//! Channel `k` fires at rate `v_k = ‖(c_k − K_k) ψ‖²` and maps
//! `ψ → (c_k − K_k) ψ / √v_k`. Between jumps the state follows
//! `dψ = A ψ dt` with
//!
//! ```text
//! A = −iH − ½ Σ c_k†c_k + ½ ⟨Σ c_k†c_k⟩ + Σ K_k* c_k − ½ Σ (⟨c_k⟩ K_k* + ⟨c_k⟩* K_k)
//! ```
//!
//! Each jump changes `ρ` by `Q_k = B_k ρ + ρ B_k† + B_k ρ B_k†` with
//! `B_k = (c_k − K_k)/√v_k − 1`, and since `dN² = dN` every power of `Q_k`
//! enters the higher density tensors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::{matrix_pairing, source_pairing};
use crate::error::{Error, Result};
use crate::lindblad::{LindbladModel, ModelJson};
use crate::matrix::{dotc, matvec_into, norm_sqr, projector, ComplexMatrix, StateVector, C64, I, ONE, ZERO};
use crate::rng::StreamRng;
use crate::tensor::{Flavor, PairTensor};
use crate::trajectory::{renormalize, run_ensemble, SdeConfig, TensorSeries, Unraveling, RATE_DT_LIMIT};

/// Rates at or below this are treated as a closed channel.
pub const ZERO_RATE: f64 = 1e-14;

/// Choice of the jump offsets `K_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Offsets {
    /// Fixed complex numbers, one per channel (`K = 0` is the standard
    /// quantum-jump equation).
    Constant(Vec<C64>),
    /// `K_k = ⟨c_k⟩`, recomputed from the current state every step.
    Orthogonal,
}

#[derive(Debug, Clone)]
pub struct JumpModel {
    model: LindbladModel,
    offsets: Offsets,
    /// `−iH − ½ Σ c†c`
    base_drift: ComplexMatrix,
}

pub struct JumpWorkspace {
    c_psi: Vec<C64>,
    means: Vec<C64>,
    offsets: Vec<C64>,
    rates: Vec<f64>,
    buf: Vec<C64>,
}

impl JumpModel {
    pub fn new(model: LindbladModel, offsets: Offsets) -> Result<Self> {
        if let Offsets::Constant(k) = &offsets {
            if k.len() != model.lindblads().len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} offsets for {} channels",
                    k.len(),
                    model.lindblads().len()
                )));
            }
        }
        let base_drift = model.hamiltonian() * (-I) - model.number_operator() * C64::new(0.5, 0.0);
        Ok(Self {
            model,
            offsets,
            base_drift,
        })
    }

    /// Reads a model whose `offsets` field is `"orthogonal"`, a list of
    /// `[re, im]` pairs, or absent (`K = 0`).
    pub fn from_json(json: &ModelJson) -> Result<Self> {
        let model = LindbladModel::from_json(json)?;
        let offsets = match &json.offsets {
            None => Offsets::Constant(vec![ZERO; model.lindblads().len()]),
            Some(serde_json::Value::String(s)) if s == "orthogonal" => Offsets::Orthogonal,
            Some(v) => {
                let pairs: Vec<[f64; 2]> = serde_json::from_value(v.clone()).map_err(|_| {
                    Error::InvalidInput("offsets must be \"orthogonal\" or a list of [re, im] pairs".into())
                })?;
                Offsets::Constant(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            }
        };
        Self::new(model, offsets)
    }

    /// Standard quantum-jump equation, `K = 0`.
    pub fn standard(model: LindbladModel) -> Result<Self> {
        let k = model.lindblads().len();
        Self::new(model, Offsets::Constant(vec![ZERO; k]))
    }

    pub fn model(&self) -> &LindbladModel {
        &self.model
    }

    pub fn offsets(&self) -> &Offsets {
        &self.offsets
    }

    /// `K_k` at state `ψ`.
    pub fn offsets_at(&self, psi: &StateVector) -> Vec<C64> {
        match &self.offsets {
            Offsets::Constant(k) => k.clone(),
            Offsets::Orthogonal => self.model.lindblads().iter().map(|c| psi.dotc(&(c * psi))).collect(),
        }
    }

    fn shifted(&self, psi: &StateVector) -> Vec<ComplexMatrix> {
        let d = self.model.dim();
        let id = ComplexMatrix::identity(d, d);
        self.model
            .lindblads()
            .iter()
            .zip(self.offsets_at(psi))
            .map(|(c, k)| c - &id * k)
            .collect()
    }

    /// `v_k = ‖(c_k − K_k) ψ‖²`.
    pub fn jump_rates(&self, psi: &StateVector) -> Vec<f64> {
        self.shifted(psi).iter().map(|s| (s * psi).norm_squared()).collect()
    }

    /// `(B_k, Q_k)` for every channel; errors on a closed channel.
    pub fn jump_operators(&self, psi: &StateVector) -> Result<(Vec<ComplexMatrix>, Vec<ComplexMatrix>)> {
        let rho = projector(psi);
        let d = self.model.dim();
        let id = ComplexMatrix::identity(d, d);
        let rates = self.jump_rates(psi);
        let mut bs = Vec::with_capacity(rates.len());
        let mut qs = Vec::with_capacity(rates.len());
        for (k, (s, v)) in self.shifted(psi).into_iter().zip(rates).enumerate() {
            if v <= ZERO_RATE {
                return Err(Error::ZeroRate(k));
            }
            let b = s / C64::new(v.sqrt(), 0.0) - &id;
            let q = &b * &rho + &rho * b.adjoint() + &b * &rho * b.adjoint();
            bs.push(b);
            qs.push(q);
        }
        Ok((bs, qs))
    }

    /// Open channels at `ψ` as `(v_k, Q_k)`; `v_k Q_k` vanishes with `v_k`,
    /// so closed channels contribute nothing.
    fn open_channels(&self, psi: &StateVector) -> Vec<(f64, ComplexMatrix)> {
        let rho = projector(psi);
        self.shifted(psi)
            .iter()
            .filter_map(|s| {
                let phi = s * psi;
                let v = phi.norm_squared();
                (v > ZERO_RATE).then(|| (v, projector(&phi) / C64::new(v, 0.0) - &rho))
            })
            .collect()
    }

    /// The no-jump generator `A` at state `ψ`.
    pub fn drift_operator(&self, psi: &StateVector) -> ComplexMatrix {
        let n_mean = psi.dotc(&(self.model.number_operator() * psi));
        let d = self.model.dim();
        let id = ComplexMatrix::identity(d, d);
        let mut a = &self.base_drift + &id * (n_mean * 0.5);
        for (c, k) in self.model.lindblads().iter().zip(self.offsets_at(psi)) {
            let mean = psi.dotc(&(c * psi));
            a += c * k.conj();
            a -= &id * ((mean * k.conj() + mean.conj() * k) * 0.5);
        }
        a
    }

    /// `(|⟨A + A†⟩|, max_k |⟨B_k + B_k† + B_k† B_k⟩|)` over open channels.
    pub fn constraint_defects(&self, psi: &StateVector) -> (f64, f64) {
        let a = self.drift_operator(psi);
        let drift = psi.dotc(&((&a + a.adjoint()) * psi)).norm();
        let d = self.model.dim();
        let id = ComplexMatrix::identity(d, d);
        let mut jump: f64 = 0.0;
        for s in self.shifted(psi) {
            let v = (&s * psi).norm_squared();
            if v <= ZERO_RATE {
                continue;
            }
            let b = s / C64::new(v.sqrt(), 0.0) - &id;
            let m = &b + b.adjoint() + b.adjoint() * &b;
            jump = jump.max(psi.dotc(&(m * psi)).norm());
        }
        (drift, jump)
    }

    /// Order-`n` hierarchy drift integrand at `ψ`:
    /// `Σ_ℓ ρ…(Lρ)_ℓ…ρ + Σ_k v_k Σ_{|S|≥2} Π_{ℓ∈S} (Q_k)_ℓ Π_{ℓ∉S} ρ_ℓ`.
    pub fn hierarchy_drift(&self, psi: &StateVector, n: usize) -> Result<PairTensor> {
        let rho = projector(psi);
        let l_rho = self.model.rhs(&rho)?;
        let channels = self.open_channels(psi);
        let subsets: Vec<u32> = (0u32..1 << n).filter(|s| s.count_ones() >= 2).collect();
        PairTensor::from_fn(n, self.model.dim(), Flavor::Classical, |ix| {
            let pick = |m: &ComplexMatrix, s: usize| m[(ix[2 * s], ix[2 * s + 1])];
            let mut acc = ZERO;
            for l in 0..n {
                let rest: C64 = (0..n).filter(|&s| s != l).map(|s| pick(&rho, s)).product();
                acc += pick(&l_rho, l) * rest;
            }
            for (v, q) in &channels {
                for &set in &subsets {
                    let term: C64 = (0..n)
                        .map(|s| if set >> s & 1 == 1 { pick(q, s) } else { pick(&rho, s) })
                        .product();
                    acc += term * *v;
                }
            }
            acc
        })
    }

    /// Generating-function drift integrand,
    /// `(a·Lρ + Σ_k v_k (e^{a·Q_k} − 1 − a·Q_k)) e^{a·ρ}`.
    pub fn generating_drift(&self, psi: &StateVector, a: &ComplexMatrix) -> Result<C64> {
        let l_rho = self.model.rhs(&projector(psi))?;
        let mut acc = matrix_pairing(&l_rho, a);
        for (v, q) in self.open_channels(psi) {
            let x = matrix_pairing(&q, a);
            acc += (x.exp() - ONE - x) * v;
        }
        Ok(acc * source_pairing(psi, a).exp())
    }

    /// Checks `Σ_k v_k dt ≤ 0.1` at the initial state.
    pub fn validate_dt(&self, psi0: &StateVector, dt: f64) -> Result<()> {
        let total: f64 = self.jump_rates(psi0).iter().sum::<f64>() * dt;
        if total > RATE_DT_LIMIT {
            return Err(Error::JumpProbability(total));
        }
        Ok(())
    }

    pub fn run_ensemble(&self, psi0: &StateVector, cfg: &SdeConfig, max_order: usize) -> Result<TensorSeries> {
        self.validate_dt(psi0, cfg.dt)?;
        run_ensemble(self, psi0, cfg, "jump", max_order)
    }
}

impl Unraveling for JumpModel {
    type Workspace = JumpWorkspace;

    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn workspace(&self) -> JumpWorkspace {
        let d = self.model.dim();
        let k = self.model.lindblads().len();
        JumpWorkspace {
            c_psi: vec![ZERO; k * d],
            means: vec![ZERO; k],
            offsets: vec![ZERO; k],
            rates: vec![0.0; k],
            buf: vec![ZERO; d],
        }
    }

    fn step(&self, psi: &mut [C64], dt: f64, renorm: bool, rng: &mut StreamRng, ws: &mut JumpWorkspace) -> Result<()> {
        let d = psi.len();
        let channels = self.model.lindblads().len();
        let mut total = 0.0;
        for (k, c) in self.model.lindblads().iter().enumerate() {
            let out = &mut ws.c_psi[k * d..(k + 1) * d];
            matvec_into(c, psi, out);
            ws.means[k] = dotc(psi, out);
            ws.offsets[k] = match &self.offsets {
                Offsets::Constant(v) => v[k],
                Offsets::Orthogonal => ws.means[k],
            };
            // ‖(c − K)ψ‖² = ‖cψ‖² − 2 Re(K* ⟨c⟩) + |K|² for unit ψ
            let kk = ws.offsets[k];
            let v = norm_sqr(out) - 2.0 * (kk.conj() * ws.means[k]).re + kk.norm_sqr();
            ws.rates[k] = v.max(0.0);
            total += ws.rates[k] * dt;
        }
        if total >= 1.0 {
            return Err(Error::JumpProbability(total));
        }
        let draw: f64 = rng.random();
        if draw < total {
            let mut acc = 0.0;
            let mut chosen = channels - 1;
            for k in 0..channels {
                acc += ws.rates[k] * dt;
                if draw < acc {
                    chosen = k;
                    break;
                }
            }
            let kk = ws.offsets[chosen];
            let scale = 1.0 / ws.rates[chosen].sqrt();
            for i in 0..d {
                psi[i] = (ws.c_psi[chosen * d + i] - kk * psi[i]) * scale;
            }
            renormalize(psi);
            return Ok(());
        }
        matvec_into(&self.base_drift, psi, &mut ws.buf);
        let n_mean: f64 = (0..channels).map(|k| norm_sqr(&ws.c_psi[k * d..(k + 1) * d])).sum();
        let mut scalar = C64::new(0.5 * n_mean, 0.0);
        for k in 0..channels {
            let (m, kk) = (ws.means[k], ws.offsets[k]);
            scalar -= (m * kk.conj() + m.conj() * kk) * 0.5;
        }
        for i in 0..d {
            let mut a_psi = ws.buf[i] + scalar * psi[i];
            for k in 0..channels {
                a_psi += ws.offsets[k].conj() * ws.c_psi[k * d + i];
            }
            ws.buf[i] = a_psi;
        }
        psi.iter_mut().zip(&ws.buf).for_each(|(p, a)| *p += a * dt);
        if renorm {
            renormalize(psi);
        }
        Ok(())
    }
}
