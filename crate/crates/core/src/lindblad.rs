// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Lindblad generators shared by the diffusive and jump unravelings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{matrix_from_json, matrix_to_json, MatrixJson};
use crate::matrix::{
    anticommutator, commutator, hermiticity_defect, is_symmetric, operator_norm, projector,
    ComplexMatrix, StateVector, C64, I,
};

/// Tolerance on `H = H†`, `u = uᵀ` and `‖u‖ ≤ 1`.
pub const MODEL_TOL: f64 = 1e-12;

/// Hamiltonian, Lindblad operators `c_k` and the complex noise correlation
/// matrix `u` of the diffusive unraveling (`dξ_j dξ_k = u_jk dt`).
#[derive(Debug, Clone)]
pub struct LindbladModel {
    dim: usize,
    h: ComplexMatrix,
    lindblads: Vec<ComplexMatrix>,
    u: ComplexMatrix,
    /// `Σ_k c_k† c_k`
    number: ComplexMatrix,
}

impl LindbladModel {
    pub fn new(h: ComplexMatrix, lindblads: Vec<ComplexMatrix>, u: ComplexMatrix) -> Result<Self> {
        let dim = h.nrows();
        if !h.is_square() {
            return Err(Error::DimensionMismatch("Hamiltonian is not square".into()));
        }
        let defect = hermiticity_defect(&h);
        if defect > MODEL_TOL {
            return Err(Error::NotHermitian(defect));
        }
        if lindblads.iter().any(|c| c.nrows() != dim || c.ncols() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "every Lindblad operator must be {dim}×{dim}"
            )));
        }
        let k = lindblads.len();
        if u.nrows() != k || u.ncols() != k {
            return Err(Error::DimensionMismatch(format!(
                "noise correlation must be {k}×{k}, got {}×{}",
                u.nrows(),
                u.ncols()
            )));
        }
        if !is_symmetric(&u, MODEL_TOL) {
            return Err(Error::InvalidNoiseCorrelation(
                crate::matrix::max_abs_diff(&u, &u.transpose()),
            ));
        }
        let norm = operator_norm(&u);
        if norm > 1.0 + MODEL_TOL {
            return Err(Error::InvalidNoiseCorrelation(norm));
        }
        let mut number = ComplexMatrix::zeros(dim, dim);
        for c in &lindblads {
            number += c.adjoint() * c;
        }
        Ok(Self {
            dim,
            h,
            lindblads,
            u,
            number,
        })
    }

    /// Model with uncorrelated complex noise, `u = 0`.
    pub fn with_isotropic_noise(h: ComplexMatrix, lindblads: Vec<ComplexMatrix>) -> Result<Self> {
        let k = lindblads.len();
        Self::new(h, lindblads, ComplexMatrix::zeros(k, k))
    }

    /// Model with real noise, `u = 1`.
    pub fn with_real_noise(h: ComplexMatrix, lindblads: Vec<ComplexMatrix>) -> Result<Self> {
        let k = lindblads.len();
        Self::new(h, lindblads, ComplexMatrix::identity(k, k))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.h
    }

    pub fn lindblads(&self) -> &[ComplexMatrix] {
        &self.lindblads
    }

    pub fn noise_correlation(&self) -> &ComplexMatrix {
        &self.u
    }

    /// `Σ_k c_k† c_k`.
    pub fn number_operator(&self) -> &ComplexMatrix {
        &self.number
    }

    fn check_dim(&self, m: &ComplexMatrix) -> Result<()> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {0}×{0} matrix, got {1}×{2}",
                self.dim,
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(())
    }

    /// `−i[H, ρ] + Σ_k (c_k ρ c_k† − ½{c_k† c_k, ρ})`.
    pub fn rhs(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(rho)?;
        let mut out = commutator(&self.h, rho) * (-I);
        for c in &self.lindblads {
            out += c * rho * c.adjoint();
        }
        out -= anticommutator(&self.number, rho) * C64::new(0.5, 0.0);
        Ok(out)
    }

    /// `ρ(t)` at every entry of `times` (nondecreasing, starting at the time
    /// of `rho0`) by fixed-step RK4 with steps no longer than `dt`.
    pub fn evolve(&self, rho0: &ComplexMatrix, times: &[f64], dt: f64) -> Result<Vec<ComplexMatrix>> {
        self.check_dim(rho0)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt = {dt} must be positive")));
        }
        if times.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::InvalidInput("output times must be nondecreasing".into()));
        }
        let half = C64::new(0.5, 0.0);
        let mut rho = rho0.clone();
        let mut out = Vec::with_capacity(times.len());
        if !times.is_empty() {
            out.push(rho.clone());
        }
        for w in times.windows(2) {
            let span = w[1] - w[0];
            let steps = (span / dt).ceil() as usize;
            let h = if steps > 0 { span / steps as f64 } else { 0.0 };
            let hc = C64::new(h, 0.0);
            for _ in 0..steps {
                let k1 = self.rhs(&rho)?;
                let k2 = self.rhs(&(&rho + &k1 * hc * half))?;
                let k3 = self.rhs(&(&rho + &k2 * hc * half))?;
                let k4 = self.rhs(&(&rho + &k3 * hc))?;
                rho += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * (hc / 6.0);
            }
            out.push(rho.clone());
        }
        Ok(out)
    }

    /// Fluctuation operators `c_k − ⟨c_k⟩` at `ψ`.
    pub fn fluctuations(&self, psi: &StateVector) -> Vec<ComplexMatrix> {
        let id = ComplexMatrix::identity(self.dim, self.dim);
        self.lindblads
            .iter()
            .map(|c| c - &id * psi.dotc(&(c * psi)))
            .collect()
    }

    /// `W = Σ_k (c_k − ⟨c_k⟩) ρ (c_k − ⟨c_k⟩)†` with `ρ = |ψ⟩⟨ψ|`.
    pub fn transition_rate_operator(&self, psi: &StateVector) -> Result<ComplexMatrix> {
        if psi.len() != self.dim {
            return Err(Error::DimensionMismatch("state dimension".into()));
        }
        let rho = projector(psi);
        let mut w = ComplexMatrix::zeros(self.dim, self.dim);
        for delta in self.fluctuations(psi) {
            w += &delta * &rho * delta.adjoint();
        }
        Ok(w)
    }

    pub fn to_json(&self) -> ModelJson {
        ModelJson {
            dim: self.dim,
            h: matrix_to_json(&self.h),
            lindblads: self.lindblads.iter().map(matrix_to_json).collect(),
            u: Some(matrix_to_json(&self.u)),
            offsets: None,
        }
    }

    pub fn from_json(json: &ModelJson) -> Result<Self> {
        let h = matrix_from_json(&json.h)?;
        if h.nrows() != json.dim {
            return Err(Error::DimensionMismatch(format!(
                "H is {}×{} but dim is {}",
                h.nrows(),
                h.ncols(),
                json.dim
            )));
        }
        let lindblads = json
            .lindblads
            .iter()
            .map(matrix_from_json)
            .collect::<Result<Vec<_>>>()?;
        match &json.u {
            Some(u) => Self::new(h, lindblads, matrix_from_json(u)?),
            None => Self::with_isotropic_noise(h, lindblads),
        }
    }
}

/// Serialized model: `{dim, H, lindblads, u, offsets}`. `u` defaults to zero
/// and `offsets` is only read by the jump unraveling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelJson {
    pub dim: usize,
    #[serde(rename = "H")]
    pub h: MatrixJson,
    pub lindblads: Vec<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<serde_json::Value>,
}
