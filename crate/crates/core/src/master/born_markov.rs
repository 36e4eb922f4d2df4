// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Born–Markov (rotating-wave) hierarchy generator.
//!
//! For `n = 1` this is the Lindblad equation
//! `i[ρ, Σ S_αβ A_α†A_β] + Σ γ_αβ (A_β ρ A_α† − ½{A_α†A_β, ρ})`.
//! For `n ≥ 2` the sandwich term is absent from the single-slot part and
//! each cyclic neighbour pair `(ℓ, ℓ+1)` instead carries
//! `Σ γ_αβ (ρ A_α†)_ℓ (A_β ρ)_{ℓ+1}`.

use serde::{Deserialize, Serialize};

use super::{Generator, ProductExpansion};
use crate::error::{Error, Result};
use crate::io::{matrix_from_json, matrix_to_json, MatrixJson};
use crate::matrix::{
    anticommutator, commutator, hermiticity_defect, max_abs_diff, min_eigenvalue, ComplexMatrix, C64, DEFAULT_TOL,
    I, ZERO,
};

/// Operators `A_α(ω)` at one Bohr frequency with their rate and shift
/// tables.
#[derive(Debug, Clone)]
pub struct Channel {
    pub omega: f64,
    pub ops: Vec<ComplexMatrix>,
    /// `γ_αβ(ω)`, Hermitian positive semidefinite.
    pub gamma: ComplexMatrix,
    /// `S_αβ(ω)`, Hermitian.
    pub shift: ComplexMatrix,
}

#[derive(Debug, Clone)]
pub struct BornMarkov {
    dim: usize,
    channels: Vec<Channel>,
    /// `Σ_ω Σ_αβ S_αβ A_α†A_β`
    lamb: ComplexMatrix,
    /// `Σ_ω Σ_αβ γ_αβ A_α†A_β`
    damping: ComplexMatrix,
}

impl BornMarkov {
    pub fn new(dim: usize, channels: Vec<Channel>) -> Result<Self> {
        let mut lamb = ComplexMatrix::zeros(dim, dim);
        let mut damping = ComplexMatrix::zeros(dim, dim);
        for ch in &channels {
            let k = ch.ops.len();
            if ch.ops.iter().any(|a| a.nrows() != dim || a.ncols() != dim) {
                return Err(Error::DimensionMismatch(format!(
                    "operators at ω = {} must be {dim}×{dim}",
                    ch.omega
                )));
            }
            for (name, m) in [("γ", &ch.gamma), ("S", &ch.shift)] {
                if m.nrows() != k || m.ncols() != k {
                    return Err(Error::DimensionMismatch(format!("{name}(ω = {}) must be {k}×{k}", ch.omega)));
                }
                let defect = hermiticity_defect(m);
                if defect > DEFAULT_TOL {
                    return Err(Error::NotHermitian(defect));
                }
            }
            if k > 0 && min_eigenvalue(&ch.gamma) < -DEFAULT_TOL {
                return Err(Error::InvalidInput(format!("γ(ω = {}) is not positive semidefinite", ch.omega)));
            }
            for a in 0..k {
                for b in 0..k {
                    let prod = ch.ops[a].adjoint() * &ch.ops[b];
                    lamb += &prod * ch.shift[(a, b)];
                    damping += &prod * ch.gamma[(a, b)];
                }
            }
        }
        check_conjugate_pairs(&channels)?;
        Ok(Self {
            dim,
            channels,
            lamb,
            damping,
        })
    }

    /// Single channel with `γ = rate` and no shift.
    pub fn single(op: ComplexMatrix, rate: f64) -> Result<Self> {
        let dim = op.nrows();
        let one = |x: f64| ComplexMatrix::from_element(1, 1, C64::new(x, 0.0));
        Self::new(
            dim,
            vec![Channel {
                omega: 0.0,
                ops: vec![op],
                gamma: one(rate),
                shift: one(0.0),
            }],
        )
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// `Σ S_αβ A_α†A_β` summed over frequencies.
    pub fn lamb_operator(&self) -> &ComplexMatrix {
        &self.lamb
    }

    pub fn to_json(&self) -> BornMarkovJson {
        BornMarkovJson {
            dim: self.dim,
            channels: self
                .channels
                .iter()
                .map(|c| ChannelJson {
                    omega: c.omega,
                    ops: c.ops.iter().map(matrix_to_json).collect(),
                    gamma: matrix_to_json(&c.gamma),
                    shift: Some(matrix_to_json(&c.shift)),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &BornMarkovJson) -> Result<Self> {
        let channels = json
            .channels
            .iter()
            .map(|c| {
                let ops = c.ops.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
                let k = ops.len();
                Ok(Channel {
                    omega: c.omega,
                    ops,
                    gamma: matrix_from_json(&c.gamma)?,
                    shift: match &c.shift {
                        Some(s) => matrix_from_json(s)?,
                        None => ComplexMatrix::zeros(k, k),
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(json.dim, channels)
    }
}

/// Where both `ω` and `−ω` are present, their operator lists must be
/// adjoints of each other.
fn check_conjugate_pairs(channels: &[Channel]) -> Result<()> {
    for a in channels {
        for b in channels {
            if a.omega > 0.0 && b.omega == -a.omega && a.ops.len() == b.ops.len() {
                for (x, y) in a.ops.iter().zip(&b.ops) {
                    let defect = max_abs_diff(&x.adjoint(), y);
                    if defect > DEFAULT_TOL {
                        return Err(Error::InvalidInput(format!(
                            "A(−ω) must equal A(ω)† at ω = {} (defect {defect:.3e})",
                            a.omega
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

impl Generator for BornMarkov {
    fn dim(&self) -> usize {
        self.dim
    }

    fn expansion(&self, slots: &[ComplexMatrix]) -> Result<ProductExpansion> {
        self.check_slots(slots)?;
        let n = slots.len();
        let mut out = ProductExpansion::new(n, self.dim)?;
        let half = C64::new(0.5, 0.0);
        for (l, rho) in slots.iter().enumerate() {
            let mut x = commutator(rho, &self.lamb) * I - anticommutator(&self.damping, rho) * half;
            if n == 1 {
                for ch in &self.channels {
                    for (a, aa) in ch.ops.iter().enumerate() {
                        for (b, ab) in ch.ops.iter().enumerate() {
                            let g = ch.gamma[(a, b)];
                            if g != ZERO {
                                x += ab * rho * aa.adjoint() * g;
                            }
                        }
                    }
                }
            }
            out.push_slot(slots, l, x);
        }
        if n >= 2 {
            for l in 0..n {
                let m = (l + 1) % n;
                for ch in &self.channels {
                    for (a, aa) in ch.ops.iter().enumerate() {
                        let left = &slots[l] * aa.adjoint();
                        for (b, ab) in ch.ops.iter().enumerate() {
                            let g = ch.gamma[(a, b)];
                            if g != ZERO {
                                out.push_pair(slots, l, &left * g, m, ab * &slots[m]);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `(4ω³/3)(1 + N(ω))` with `N(ω) = 1/(e^{βω} − 1)`; `beta = None` is zero
/// temperature.
pub fn optical_rate(omega: f64, beta: Option<f64>) -> f64 {
    let occupation = match beta {
        Some(b) => 1.0 / (b * omega).exp_m1(),
        None if omega > 0.0 => 0.0,
        None => -1.0,
    };
    4.0 * omega.powi(3) / 3.0 * (1.0 + occupation)
}

/// One optical transition: the vector operator `A⃗(ω)` for `ω > 0` and the
/// Lamb shifts `S(ω)`, `S(−ω)`.
#[derive(Debug, Clone)]
pub struct OpticalTransition {
    pub omega: f64,
    pub dipole: Vec<ComplexMatrix>,
    pub shift: [f64; 2],
}

/// Quantum-optical specialization: `γ_αβ(ω) = (4ω³/3)(1 + N(ω)) δ_αβ` and
/// `S_αβ(ω) = S(ω) δ_αβ` over the components of `A⃗`.
#[derive(Debug, Clone)]
pub struct QuantumOptical {
    pub dim: usize,
    pub beta: Option<f64>,
    pub transitions: Vec<OpticalTransition>,
}

impl QuantumOptical {
    /// Two-level atom with lowering operator `σ₋` and dipole along one axis.
    pub fn two_level(omega: f64, beta: Option<f64>) -> Self {
        let z = ComplexMatrix::zeros(2, 2);
        Self {
            dim: 2,
            beta,
            transitions: vec![OpticalTransition {
                omega,
                dipole: vec![crate::matrix::sigma_minus(), z.clone(), z],
                shift: [0.0, 0.0],
            }],
        }
    }

    /// Expands each transition into its `±ω` channels.
    pub fn to_born_markov(&self) -> Result<BornMarkov> {
        let mut channels = Vec::new();
        for t in &self.transitions {
            if !(t.omega > 0.0) {
                return Err(Error::InvalidInput(format!("transition frequency {} must be positive", t.omega)));
            }
            let k = t.dipole.len();
            let id = ComplexMatrix::identity(k, k);
            for (sign, shift) in [(1.0, t.shift[0]), (-1.0, t.shift[1])] {
                let omega = sign * t.omega;
                let ops = if sign > 0.0 {
                    t.dipole.clone()
                } else {
                    t.dipole.iter().map(|a| a.adjoint()).collect()
                };
                channels.push(Channel {
                    omega,
                    ops,
                    gamma: &id * C64::new(optical_rate(omega, self.beta), 0.0),
                    shift: &id * C64::new(shift, 0.0),
                });
            }
        }
        BornMarkov::new(self.dim, channels)
    }

    pub fn from_json(json: &QuantumOpticalJson) -> Result<Self> {
        let transitions = json
            .transitions
            .iter()
            .map(|t| {
                Ok(OpticalTransition {
                    omega: t.omega,
                    dipole: t.dipole.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?,
                    shift: t.shift.unwrap_or([0.0, 0.0]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: json.dim,
            beta: json.beta,
            transitions,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelJson {
    pub omega: f64,
    pub ops: Vec<MatrixJson>,
    pub gamma: MatrixJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<MatrixJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BornMarkovJson {
    pub dim: usize,
    pub channels: Vec<ChannelJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionJson {
    pub omega: f64,
    pub dipole: Vec<MatrixJson>,
    #[serde(default)]
    pub shift: Option<[f64; 2]>,
}

/// `beta` omitted means zero temperature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantumOpticalJson {
    pub dim: usize,
    #[serde(default)]
    pub beta: Option<f64>,
    pub transitions: Vec<TransitionJson>,
}
