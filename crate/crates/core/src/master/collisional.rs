// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Collisional decoherence of a heavy particle on a position grid.
//!
//! Entry `(R₁R′₁, …, RₙR′ₙ)` of the order-`n` tensor decays at the rate
//! `Σ_ℓ F(R_{ℓ+1} − R′_ℓ)` with `R_{n+1} = R₁`, where
//!
//! ```text
//! F(R) = N ∫d³k μ(k) |k|/m ∫dn̂ (1 − e^{i(k − n̂|k|)·R}) |f(n̂|k|, k)|²
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::io::{matrix_from_json, CsvTable, MatrixJson};
use crate::matrix::{ComplexMatrix, StateVector, C64, ZERO};
use crate::quadrature::{gauss_legendre_interval, SphereRule};
use crate::tensor::{Flavor, PairTensor};

/// Gaussian momentum integrals are cut at this many standard deviations.
pub const GAUSSIAN_CUTOFF: f64 = 8.0;

/// Bath momentum distribution `μ(k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentumDistribution {
    /// Isotropic `(2πσ²)^{−3/2} e^{−k²/2σ²}`.
    Gaussian { width: f64 },
    /// Discrete momenta with probabilities.
    Table { momenta: Vec<[f64; 3]>, weights: Vec<f64> },
}

impl MomentumDistribution {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian { width } if !(*width > 0.0 && width.is_finite()) => {
                Err(Error::InvalidInput(format!("momentum width {width} must be positive")))
            }
            Self::Gaussian { .. } => Ok(()),
            Self::Table { momenta, weights } => {
                if momenta.len() != weights.len() || momenta.is_empty() {
                    return Err(Error::InvalidInput("momentum table needs one weight per momentum".into()));
                }
                if weights.iter().any(|w| !(*w >= 0.0)) {
                    return Err(Error::InvalidInput("momentum weights must be nonnegative".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!("momentum distribution sums to {total}, not 1")));
                }
                Ok(())
            }
        }
    }
}

/// Quadrature orders: radial Gauss–Legendre nodes, polar Gauss–Legendre
/// nodes and azimuthal trapezoid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelQuadrature {
    pub radial: usize,
    pub polar: usize,
    pub azimuthal: usize,
}

impl Default for KernelQuadrature {
    fn default() -> Self {
        Self {
            radial: 32,
            polar: 32,
            azimuthal: 8,
        }
    }
}

impl KernelQuadrature {
    pub fn doubled(self) -> Self {
        Self {
            radial: 2 * self.radial,
            polar: 2 * self.polar,
            azimuthal: 2 * self.azimuthal,
        }
    }
}

/// Scatterer density `N`, scatterer mass `m`, momentum distribution and
/// `|f|² = a₀ + a₁ cos θ` in the scattering angle `θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringModel {
    pub density: f64,
    pub mass: f64,
    pub momentum: MomentumDistribution,
    pub amplitude: [f64; 2],
}

impl ScatteringModel {
    pub fn kernel(&self, r: [f64; 3], quad: KernelQuadrature) -> Result<C64> {
        let [a0, a1] = self.amplitude;
        collisional_kernel(self.density, self.mass, &self.momentum, |c, _| a0 + a1 * c, r, quad)
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `F(R)` for a general `|f|²(cos θ, |k|)`.
pub fn collisional_kernel<A>(
    density: f64,
    mass: f64,
    momentum: &MomentumDistribution,
    amplitude: A,
    r: [f64; 3],
    quad: KernelQuadrature,
) -> Result<C64>
where
    A: Fn(f64, f64) -> f64 + Sync,
{
    momentum.validate()?;
    if !(mass > 0.0) {
        return Err(Error::InvalidInput("scatterer mass must be positive".into()));
    }
    let len = dot(r, r).sqrt();
    if len == 0.0 {
        return Ok(ZERO);
    }
    let axis = [r[0] / len, r[1] / len, r[2] / len];
    let rule = SphereRule::aligned(quad.polar, quad.azimuthal, axis);
    let proj: Vec<f64> = rule.directions.iter().map(|d| dot(*d, r)).collect();
    // ∫dn̂ (1 − e^{i(k − n̂|k|)·R}) |f|² for momentum magnitude `k` along `khat`
    let outgoing = |k: f64, khat: [f64; 3], k_proj: f64| -> C64 {
        let mut acc = ZERO;
        for ((n, w), p) in rule.directions.iter().zip(&rule.weights).zip(&proj) {
            let f2 = amplitude(dot(khat, *n), k);
            let phase = k * (k_proj - p);
            acc += C64::new(1.0 - phase.cos(), -phase.sin()) * (w * f2);
        }
        acc
    };
    let total = match momentum {
        MomentumDistribution::Gaussian { width } => {
            let (ks, wk) = gauss_legendre_interval(quad.radial, 0.0, GAUSSIAN_CUTOFF * width);
            let norm = (2.0 * PI * width * width).powf(-1.5);
            ks.par_iter()
                .zip(&wk)
                .map(|(&k, &w)| {
                    let radial = w * k * k * norm * (-k * k / (2.0 * width * width)).exp() * k / mass;
                    let mut acc = ZERO;
                    for (d, (wd, p)) in rule.directions.iter().zip(rule.weights.iter().zip(&proj)) {
                        acc += outgoing(k, *d, *p) * *wd;
                    }
                    acc * radial
                })
                .reduce(|| ZERO, |a, b| a + b)
        }
        MomentumDistribution::Table { momenta, weights } => momenta
            .iter()
            .zip(weights)
            .map(|(kv, w)| {
                let k = dot(*kv, *kv).sqrt();
                if k == 0.0 {
                    return ZERO;
                }
                let khat = [kv[0] / k, kv[1] / k, kv[2] / k];
                outgoing(k, khat, k * dot(khat, r)) * (w * k / mass)
            })
            .sum(),
    };
    Ok(total * density)
}

/// Closed-form collisional hierarchy on a grid with kernel table
/// `F[a][b] = F(R_a − R_b)`.
#[derive(Debug, Clone)]
pub struct Collisional {
    grid: Vec<[f64; 3]>,
    kernel: ComplexMatrix,
}

impl Collisional {
    pub fn new(grid: Vec<[f64; 3]>, kernel: ComplexMatrix) -> Result<Self> {
        let g = grid.len();
        if g == 0 || kernel.nrows() != g || kernel.ncols() != g {
            return Err(Error::DimensionMismatch(format!("kernel table must be {g}×{g}")));
        }
        for a in 0..g {
            if kernel[(a, a)] != ZERO {
                return Err(Error::InvalidInput("F(0) must vanish".into()));
            }
        }
        Ok(Self { grid, kernel })
    }

    pub fn from_fn(grid: Vec<[f64; 3]>, f: impl Fn([f64; 3]) -> C64) -> Result<Self> {
        let g = grid.len();
        let kernel = ComplexMatrix::from_fn(g, g, |a, b| {
            if a == b {
                ZERO
            } else {
                let (x, y) = (grid[a], grid[b]);
                f([x[0] - y[0], x[1] - y[1], x[2] - y[2]])
            }
        });
        Self::new(grid, kernel)
    }

    pub fn from_scattering(grid: Vec<[f64; 3]>, model: &ScatteringModel, quad: KernelQuadrature) -> Result<Self> {
        model.momentum.validate()?;
        let g = grid.len();
        let pairs: Vec<(usize, usize)> = (0..g).flat_map(|a| (0..g).map(move |b| (a, b))).filter(|(a, b)| a != b).collect();
        let values = pairs
            .par_iter()
            .map(|&(a, b)| {
                let (x, y) = (grid[a], grid[b]);
                model.kernel([x[0] - y[0], x[1] - y[1], x[2] - y[2]], quad)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut kernel = ComplexMatrix::zeros(g, g);
        for ((a, b), v) in pairs.into_iter().zip(values) {
            kernel[(a, b)] = v;
        }
        Self::new(grid, kernel)
    }

    pub fn grid(&self) -> &[[f64; 3]] {
        &self.grid
    }

    pub fn kernel(&self) -> &ComplexMatrix {
        &self.kernel
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    /// `Σ_ℓ F(R_{ℓ+1} − R′_ℓ)` at multi-index `(i₁, j₁, …, iₙ, jₙ)`.
    pub fn exponent(&self, idx: &[usize]) -> C64 {
        let n = idx.len() / 2;
        (0..n).map(|l| self.kernel[(idx[2 * ((l + 1) % n)], idx[2 * l + 1])]).sum()
    }

    /// The decay exponent as an order-`n` tensor.
    pub fn exponent_tensor(&self, n: usize) -> Result<PairTensor> {
        PairTensor::from_fn(n, self.dim(), Flavor::Quantum, |idx| self.exponent(idx))
    }

    /// `(F^S, F^A)` for `n = 3`: halves of the cyclic sum plus and minus the
    /// reversed-cycle sum `F(R₁ − R′₂) + F(R₃ − R′₁) + F(R₂ − R′₃)`.
    pub fn third_order_split(&self) -> Result<(PairTensor, PairTensor)> {
        let d = self.dim();
        let k = &self.kernel;
        let reversed = |idx: &[usize]| k[(idx[0], idx[3])] + k[(idx[4], idx[1])] + k[(idx[2], idx[5])];
        let sym = PairTensor::from_fn(3, d, Flavor::Quantum, |idx| (self.exponent(idx) + reversed(idx)) * 0.5)?;
        let anti = PairTensor::from_fn(3, d, Flavor::Quantum, |idx| (self.exponent(idx) - reversed(idx)) * 0.5)?;
        Ok((sym, anti))
    }

    fn check(&self, rho: &PairTensor) -> Result<()> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "tensor dimension {} does not match the {}-point grid",
                rho.dim(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `ρⁿ(t) = exp(−t Σ_ℓ F(R_{ℓ+1} − R′_ℓ)) ρⁿ(0)`.
    pub fn evolve(&self, rho0: &PairTensor, t: f64) -> Result<PairTensor> {
        self.check(rho0)?;
        let mut out = rho0.clone().with_flavor(Flavor::Quantum);
        let n = rho0.order();
        let mut idx = vec![0; 2 * n];
        for (flat, z) in out.entries_mut().iter_mut().enumerate() {
            decode_into(flat, self.dim(), &mut idx);
            *z *= (-self.exponent(&idx) * t).exp();
        }
        Ok(out)
    }

    /// `∂ρⁿ/∂t = −Σ_ℓ F(R_{ℓ+1} − R′_ℓ) ρⁿ`.
    pub fn derivative(&self, rho: &PairTensor) -> Result<PairTensor> {
        self.check(rho)?;
        let mut out = rho.clone();
        let mut idx = vec![0; 2 * rho.order()];
        for (flat, z) in out.entries_mut().iter_mut().enumerate() {
            decode_into(flat, self.dim(), &mut idx);
            *z *= -self.exponent(&idx);
        }
        Ok(out)
    }

    /// Kernel table as CSV rows `(Rx, Ry, Rz, Re F, Im F)` over grid pairs.
    pub fn kernel_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["rx", "ry", "rz", "re_f", "im_f"].map(String::from).to_vec());
        for a in 0..self.dim() {
            for b in 0..self.dim() {
                let (x, y) = (self.grid[a], self.grid[b]);
                let f = self.kernel[(a, b)];
                t.push(vec![x[0] - y[0], x[1] - y[1], x[2] - y[2], f.re, f.im]);
            }
        }
        t
    }

    pub fn from_json(json: &CollisionalJson) -> Result<Self> {
        let grid = json
            .grid
            .iter()
            .map(|p| match p.as_slice() {
                [x] => Ok([*x, 0.0, 0.0]),
                [x, y] => Ok([*x, *y, 0.0]),
                [x, y, z] => Ok([*x, *y, *z]),
                _ => Err(Error::InvalidInput("grid points need 1 to 3 coordinates".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        match (&json.kernel, &json.scattering) {
            (Some(k), None) => Self::new(grid, matrix_from_json(k)?),
            (None, Some(s)) => Self::from_scattering(grid, s, json.quadrature.unwrap_or_default()),
            _ => Err(Error::InvalidInput("give exactly one of `kernel` or `scattering`".into())),
        }
    }
}

/// Pure grid state `|ψ⟩⟨ψ|` raised to the `n`-fold outer power.
pub fn pure_grid_tensor(psi: &StateVector, n: usize) -> Result<PairTensor> {
    let rho = crate::matrix::projector(psi);
    PairTensor::outer_product(&vec![rho; n], Flavor::Quantum)
}

fn decode_into(mut flat: usize, dim: usize, idx: &mut [usize]) {
    for p in (0..idx.len()).rev() {
        idx[p] = flat % dim;
        flat /= dim;
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollisionalJson {
    pub grid: Vec<Vec<f64>>,
    #[serde(default)]
    pub kernel: Option<MatrixJson>,
    #[serde(default)]
    pub scattering: Option<ScatteringModel>,
    #[serde(default)]
    pub quadrature: Option<KernelQuadrature>,
}
