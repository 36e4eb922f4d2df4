// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Classical-noise density tensors of weighted pure-state ensembles.
//!
//! For an ensemble `{w_α, |ψ_α⟩}` the order-`n` tensor is
//! `Σ_α w_α Π_ℓ (ρ_α)_{iℓ jℓ}` with `ρ_α = |ψ_α⟩⟨ψ_α|`, and the generating
//! function is `G[a] = Σ_α w_α exp(Σ_ij (ρ_α)_ij a_ij)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{projector, require_hermitian, ComplexMatrix, StateVector, C64, DEFAULT_TOL, ZERO};
use crate::stats::{batch_ranges, check_batches};
use crate::tensor::{accumulate_power, checked_len, pair_codes, Flavor, PairTensor};

/// Weights within this distance of summing to one are renormalized.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;
/// Member norms must be one within this tolerance.
pub const NORM_TOL: f64 = 1e-12;

const CHUNK: usize = 4096;

#[derive(Debug, Clone)]
pub struct WeightedEnsemble {
    dim: usize,
    weights: Vec<f64>,
    states: Vec<StateVector>,
}

impl WeightedEnsemble {
    pub fn new(dim: usize, members: Vec<(f64, StateVector)>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let mut weights = Vec::with_capacity(members.len());
        let mut states = Vec::with_capacity(members.len());
        for (k, (w, psi)) in members.into_iter().enumerate() {
            if psi.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "member {k} has dimension {}, expected {dim}",
                    psi.len()
                )));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidInput(format!("member {k} has weight {w}")));
            }
            let norm = psi.norm();
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidInput(format!("member {k} has norm {norm}")));
            }
            weights.push(w);
            states.push(psi);
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidInput(format!("weights sum to {total}")));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { dim, weights, states })
    }

    /// Equal weights `1/N`.
    pub fn uniform(dim: usize, states: Vec<StateVector>) -> Result<Self> {
        let w = 1.0 / states.len().max(1) as f64;
        Self::new(dim, states.into_iter().map(|s| (w, s)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn projector(&self, k: usize) -> ComplexMatrix {
        projector(&self.states[k])
    }

    /// `Σ_{α∈range} w_α Π_ℓ (ρ_α)_{iℓ jℓ}` as flat entries.
    fn partial_tensor(&self, n: usize, range: std::ops::Range<usize>) -> Vec<C64> {
        let len = (self.dim * self.dim).pow(n as u32);
        let mut acc = vec![ZERO; len];
        let mut scratch = Vec::with_capacity(len);
        for k in range {
            let codes = pair_codes(&self.projector(k));
            accumulate_power(&mut acc, &codes, self.weights[k], &mut scratch);
        }
        acc
    }

    /// Partial sums over fixed chunks, evaluated in parallel and merged in
    /// chunk order so the result does not depend on the thread count.
    fn chunked_tensor(&self, n: usize, range: std::ops::Range<usize>) -> Vec<C64> {
        let chunks: Vec<_> = range
            .clone()
            .step_by(CHUNK)
            .map(|s| s..(s + CHUNK).min(range.end))
            .collect();
        let parts: Vec<Vec<C64>> = chunks
            .into_par_iter()
            .map(|r| self.partial_tensor(n, r))
            .collect();
        let mut acc = vec![ZERO; (self.dim * self.dim).pow(n as u32)];
        for p in parts {
            acc.iter_mut().zip(p).for_each(|(a, b)| *a += b);
        }
        acc
    }

    /// Order-`n` classical density tensor.
    pub fn density_tensor(&self, n: usize) -> Result<PairTensor> {
        if n == 0 {
            return Err(Error::OrderTooSmall(0));
        }
        checked_len(n, self.dim)?;
        let entries = self.chunked_tensor(n, 0..self.len());
        PairTensor::from_entries(n, self.dim, Flavor::Classical, entries)
    }

    /// Density tensor with entrywise batch-means standard errors, for
    /// equal-weight sampled ensembles.
    pub fn density_tensor_with_errors(&self, n: usize, batches: usize) -> Result<TensorEstimate> {
        if n == 0 {
            return Err(Error::OrderTooSmall(0));
        }
        checked_len(n, self.dim)?;
        check_batches(self.len(), batches)?;
        let ranges = batch_ranges(self.len(), batches);
        let mut batch_means = Vec::with_capacity(batches);
        for r in ranges {
            let wsum: f64 = self.weights[r.clone()].iter().sum();
            let mut part = self.chunked_tensor(n, r);
            part.iter_mut().for_each(|z| *z /= wsum);
            batch_means.push(part);
        }
        let mean = self.density_tensor(n)?;
        TensorEstimate::from_batches(&batch_means, mean.into_entries(), n, self.dim)
    }

    /// `G[a] = Σ_α w_α exp(Σ_ij (ρ_α)_ij a_ij)`.
    pub fn generating_function(&self, a: &ComplexMatrix) -> Result<C64> {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(Error::DimensionMismatch("source matrix shape".into()));
        }
        let chunks: Vec<_> = (0..self.len())
            .step_by(CHUNK)
            .map(|s| s..(s + CHUNK).min(self.len()))
            .collect();
        let parts: Vec<C64> = chunks
            .into_par_iter()
            .map(|r| {
                r.map(|k| self.weights[k] * source_pairing(&self.states[k], a).exp())
                    .sum()
            })
            .collect();
        Ok(parts.into_iter().sum())
    }

    /// `(Var, Var₁, Var₂)` of a Hermitian observable: total variance, the
    /// mean in-state variance and the variance of in-state means, computed
    /// from the order-1 and order-2 tensors.
    pub fn variance_decomposition(&self, r: &ComplexMatrix) -> Result<(f64, f64, f64)> {
        require_hermitian(r, DEFAULT_TOL)?;
        let rho1 = self.density_tensor(1)?;
        let rho2 = self.density_tensor(2)?;
        variance_from_tensors(&rho1, &rho2, r)
    }

    /// `Σ_α w_α ⟨R⟩_α ⟨S⟩_α`.
    pub fn pair_expectation(&self, r: &ComplexMatrix, s: &ComplexMatrix) -> Result<C64> {
        self.density_tensor(2)?.contract_with(&[r.clone(), s.clone()])
    }

    pub fn to_json(&self) -> EnsembleJson {
        EnsembleJson {
            dim: self.dim,
            members: self
                .weights
                .iter()
                .zip(&self.states)
                .map(|(&w, psi)| MemberJson {
                    w,
                    psi: psi.iter().map(|z| [z.re, z.im]).collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &EnsembleJson) -> Result<Self> {
        Self::new(
            json.dim,
            json.members
                .iter()
                .map(|m| {
                    (
                        m.w,
                        StateVector::from_iterator(
                            m.psi.len(),
                            m.psi.iter().map(|&[re, im]| C64::new(re, im)),
                        ),
                    )
                })
                .collect(),
        )
    }
}

/// `Σ_ij ρ_ij a_ij` for `ρ = |ψ⟩⟨ψ|`.
pub fn source_pairing(psi: &StateVector, a: &ComplexMatrix) -> C64 {
    let d = psi.len();
    let mut acc = ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += psi[i] * psi[j].conj() * a[(i, j)];
        }
    }
    acc
}

/// `Σ_ij m_ij a_ij`.
pub fn matrix_pairing(m: &ComplexMatrix, a: &ComplexMatrix) -> C64 {
    m.iter().zip(a.iter()).map(|(x, y)| x * y).sum()
}

/// Variance split from order-1 and order-2 tensors.
pub fn variance_from_tensors(
    rho1: &PairTensor,
    rho2: &PairTensor,
    r: &ComplexMatrix,
) -> Result<(f64, f64, f64)> {
    let r2 = r * r;
    let mean_sq = rho1.contract_with(std::slice::from_ref(&r2))?.re;
    let mean = rho1.contract_with(std::slice::from_ref(r))?.re;
    let pair = rho2.contract_with(&[r.clone(), r.clone()])?.re;
    Ok((mean_sq - mean * mean, mean_sq - pair, pair - mean * mean))
}

/// Tensor mean with entrywise standard errors of the real and imaginary
/// parts.
#[derive(Debug, Clone)]
pub struct TensorEstimate {
    pub mean: PairTensor,
    pub stderr_re: Vec<f64>,
    pub stderr_im: Vec<f64>,
}

impl TensorEstimate {
    /// Combines equally sized batch means; `mean` overrides the plain
    /// average when the caller has an exactly weighted total.
    pub fn from_batches(batches: &[Vec<C64>], mean: Vec<C64>, order: usize, dim: usize) -> Result<Self> {
        let b = batches.len() as f64;
        let len = mean.len();
        let mut avg = vec![ZERO; len];
        for bm in batches {
            avg.iter_mut().zip(bm).for_each(|(a, x)| *a += x / b);
        }
        let mut var_re = vec![0.0; len];
        let mut var_im = vec![0.0; len];
        for bm in batches {
            for k in 0..len {
                let d = bm[k] - avg[k];
                var_re[k] += d.re * d.re;
                var_im[k] += d.im * d.im;
            }
        }
        let norm = 1.0 / ((b - 1.0) * b);
        Ok(Self {
            mean: PairTensor::from_entries(order, dim, Flavor::Classical, mean)?,
            stderr_re: var_re.iter().map(|v| (v * norm).sqrt()).collect(),
            stderr_im: var_im.iter().map(|v| (v * norm).sqrt()).collect(),
        })
    }

    /// Largest entrywise deviation from `reference` in standard errors,
    /// counting real and imaginary parts separately. Components with zero
    /// error must match to `abs_tol`.
    pub fn max_z_score(&self, reference: &PairTensor, abs_tol: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, (m, r)) in self.mean.entries().iter().zip(reference.entries()).enumerate() {
            for (diff, se) in [((m.re - r.re).abs(), self.stderr_re[k]), ((m.im - r.im).abs(), self.stderr_im[k])] {
                let z = if diff <= abs_tol {
                    0.0
                } else if se > 0.0 {
                    diff / se
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z);
            }
        }
        worst
    }
}

impl TensorEstimate {
    /// Largest entrywise gap to an independent estimate in combined standard
    /// errors `√(σ₁² + σ₂²)`, real and imaginary parts separately. Gaps up to
    /// `abs_tol` count as zero.
    pub fn max_z_difference(&self, other: &TensorEstimate, abs_tol: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, (a, b)) in self.mean.entries().iter().zip(other.mean.entries()).enumerate() {
            let parts = [
                ((a.re - b.re).abs(), self.stderr_re[k].hypot(other.stderr_re[k])),
                ((a.im - b.im).abs(), self.stderr_im[k].hypot(other.stderr_im[k])),
            ];
            for (diff, se) in parts {
                let z = if diff <= abs_tol {
                    0.0
                } else if se > 0.0 {
                    diff / se
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z);
            }
        }
        worst
    }
}

/// Finite-difference defects of the two generating-function descent
/// identities at source `a`:
///
/// * `|Σ_m ∂G/∂a_mm − G|`,
/// * `max_{mq} |Σ_r ∂²G/∂a_mr∂a_rq − ∂G/∂a_mq|`.
///
/// Derivatives use fourth-order central differences with real step `h`,
/// valid because generating functions are holomorphic in every `a_ij`.
/// Mixed second derivatives apply the first-derivative stencil twice.
pub fn generating_descent_defects(
    g: impl Fn(&ComplexMatrix) -> C64,
    a: &ComplexMatrix,
    h: f64,
) -> (f64, f64) {
    const STENCIL: [(f64, f64); 4] = [(2.0, -1.0), (1.0, 8.0), (-1.0, -8.0), (-2.0, 1.0)];
    let d = a.nrows();
    let shifted = |terms: &[(usize, usize, f64)]| {
        let mut b = a.clone();
        for &(i, j, s) in terms {
            b[(i, j)] += C64::new(s * h, 0.0);
        }
        g(&b)
    };
    let first = |i: usize, j: usize| {
        STENCIL.iter().map(|&(s, w)| shifted(&[(i, j, s)]) * w).sum::<C64>() / (12.0 * h)
    };
    let second = |i: usize, j: usize, p: usize, q: usize| {
        let mut acc = ZERO;
        for &(s, w) in &STENCIL {
            for &(t, v) in &STENCIL {
                acc += shifted(&[(i, j, s), (p, q, t)]) * (w * v);
            }
        }
        acc / (144.0 * h * h)
    };
    let g0 = g(a);
    let trace_defect = ((0..d).map(|m| first(m, m)).sum::<C64>() - g0).norm();
    let mut chain_defect: f64 = 0.0;
    for m in 0..d {
        for q in 0..d {
            let lhs: C64 = (0..d).map(|r| second(m, r, r, q)).sum();
            chain_defect = chain_defect.max((lhs - first(m, q)).norm());
        }
    }
    (trace_defect, chain_defect)
}

/// Serialized ensemble: `{dim, members: [{w, psi: [[re, im], …]}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleJson {
    pub dim: usize,
    pub members: Vec<MemberJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemberJson {
    pub w: f64,
    pub psi: Vec<[f64; 2]>,
}
