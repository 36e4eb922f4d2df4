// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! The isotropic spin-1/2 ensemble `ρ(v) = ½(1 + v·σ)` with `v` uniform on
//! the unit sphere: closed-form tensors of order one to three, the closed
//! generating function `exp(½ Tr a) sinh|A|/|A|` with `A = ½ σ_ij a_ij`,
//! and a seeded Monte-Carlo sampler.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::ensemble::WeightedEnsemble;
use crate::error::{Error, Result};
use crate::matrix::{c, pauli, ComplexMatrix, StateVector, C64, ONE, ZERO};
use crate::rng::stream;
use crate::tensor::{Flavor, PairTensor};

/// Stream family used by [`sample_sphere`].
pub const SPHERE_STREAM: &str = "sphere";

/// Below this `|A·A|` the generating function switches to its power series.
pub const SERIES_THRESHOLD: f64 = 1e-6;

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// `σ_{i₁j₁} · σ_{i₂j₂}` summed over the three Pauli matrices.
fn sigma_dot(s: &[ComplexMatrix; 3], i1: usize, j1: usize, i2: usize, j2: usize) -> C64 {
    s.iter().map(|m| m[(i1, j1)] * m[(i2, j2)]).sum()
}

/// Exact order-`n` tensor for `n ∈ {1, 2, 3}`.
pub fn analytic_tensor(n: usize) -> Result<PairTensor> {
    let s = pauli();
    match n {
        1 => PairTensor::from_fn(1, 2, Flavor::Classical, |x| c(0.5 * delta(x[0], x[1]), 0.0)),
        2 => PairTensor::from_fn(2, 2, Flavor::Classical, |x| {
            (delta(x[0], x[1]) * delta(x[2], x[3]) + sigma_dot(&s, x[0], x[1], x[2], x[3]) / 3.0) * 0.25
        }),
        3 => PairTensor::from_fn(3, 2, Flavor::Classical, |x| {
            let d = |k: usize| delta(x[2 * k], x[2 * k + 1]);
            let sd = |a: usize, b: usize| sigma_dot(&s, x[2 * a], x[2 * a + 1], x[2 * b], x[2 * b + 1]);
            (d(0) * d(1) * d(2) + (sd(1, 2) * d(0) + sd(0, 2) * d(1) + sd(0, 1) * d(2)) / 3.0) * 0.125
        }),
        0 => Err(Error::OrderTooSmall(0)),
        _ => Err(Error::InvalidInput(format!(
            "no closed form for order {n}; sample the ensemble instead"
        ))),
    }
}

/// `A = ½ σ_ij a_ij`, one component per Pauli matrix.
pub fn source_vector(a: &ComplexMatrix) -> [C64; 3] {
    let s = pauli();
    let mut out = [ZERO; 3];
    for (k, m) in s.iter().enumerate() {
        out[k] = m.iter().zip(a.iter()).map(|(x, y)| x * y).sum::<C64>() * 0.5;
    }
    out
}

/// `f(x) = sinh√x / √x` with its first two derivatives in `x`.
pub fn sinhc_sqrt(x: C64) -> (C64, C64, C64) {
    if x.norm() < 0.1 {
        // f = Σ x^k / (2k+1)!
        let mut f = ZERO;
        let mut f1 = ZERO;
        let mut f2 = ZERO;
        let mut fact = 1.0;
        for k in 0..20u32 {
            if k > 0 {
                fact *= (2 * k * (2 * k + 1)) as f64;
            }
            let kf = k as f64;
            f += x.powu(k) / fact;
            if k >= 1 {
                f1 += x.powu(k - 1) * kf / fact;
            }
            if k >= 2 {
                f2 += x.powu(k - 2) * (kf * (kf - 1.0)) / fact;
            }
        }
        return (f, f1, f2);
    }
    let s = x.sqrt();
    let (sh, ch) = (s.sinh(), s.cosh());
    let f = sh / s;
    let f1 = (s * ch - sh) / (s.powu(3) * 2.0);
    let f2 = (s * s * sh - s * ch * 3.0 + sh * 3.0) / (s.powu(5) * 4.0);
    (f, f1, f2)
}

/// Closed-form generating function of the isotropic ensemble.
pub fn analytic_generating(a: &ComplexMatrix) -> Result<C64> {
    if a.nrows() != 2 || a.ncols() != 2 {
        return Err(Error::DimensionMismatch("spin source matrix must be 2×2".into()));
    }
    let v = source_vector(a);
    let x: C64 = v.iter().map(|z| z * z).sum();
    let g = (a.trace() * 0.5).exp();
    Ok(g * sinhc_value(x))
}

/// `sinh√x/√x` evaluated through the principal square root, or its even
/// power series `1 + x/3! + x²/5! + …` near zero.
pub fn sinhc_value(x: C64) -> C64 {
    if x.norm() < SERIES_THRESHOLD {
        ONE + x / 6.0 + x * x / 120.0 + x * x * x / 5040.0
    } else {
        let s = x.sqrt();
        s.sinh() / s
    }
}

/// `N` uniformly distributed unit vectors; member `k` depends only on
/// `(seed, k)`.
pub fn sample_sphere_vectors(count: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    if count == 0 {
        return Err(Error::InvalidInput("sphere sample needs at least one member".into()));
    }
    Ok((0..count as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, SPHERE_STREAM, k);
            loop {
                let g: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
                let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
                if norm > 1e-12 {
                    break [g[0] / norm, g[1] / norm, g[2] / norm];
                }
            }
        })
        .collect())
}

/// A pure state whose projector is `½(1 + v·σ)`.
pub fn bloch_state(v: [f64; 3]) -> StateVector {
    let [x, y, z] = v;
    let mut psi = if z >= 0.0 {
        let a = (0.5 * (1.0 + z)).sqrt();
        StateVector::from_vec(vec![c(a, 0.0), c(x, y) / (2.0 * a)])
    } else {
        let b = (0.5 * (1.0 - z)).sqrt();
        StateVector::from_vec(vec![c(x, -y) / (2.0 * b), c(b, 0.0)])
    };
    let n = psi.norm();
    psi.unscale_mut(n);
    psi
}

/// Equal-weight sample of the isotropic ensemble.
pub fn sample_sphere(count: usize, seed: u64) -> Result<WeightedEnsemble> {
    let states = sample_sphere_vectors(count, seed)?
        .into_iter()
        .map(bloch_state)
        .collect();
    WeightedEnsemble::uniform(2, states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{projector, sigma_z, identity};

    #[test]
    fn closed_forms() {
        let t1 = analytic_tensor(1).unwrap();
        assert_eq!(t1.get(&[0, 0]), c(0.5, 0.0));
        assert_eq!(t1.get(&[0, 1]), ZERO);
        let t3 = analytic_tensor(3).unwrap();
        assert!((t3.get(&[0, 1, 1, 0, 0, 0]) - c(1.0 / 12.0, 0.0)).norm() < 1e-15);
        assert!(analytic_tensor(4).is_err());
    }

    #[test]
    fn generating_values() {
        let zero = ComplexMatrix::zeros(2, 2);
        assert!((analytic_generating(&zero).unwrap() - ONE).norm() < 1e-15);
        let t = 0.7;
        let g = analytic_generating(&(identity(2) * c(t, 0.0))).unwrap();
        assert!((g - c(t.exp(), 0.0)).norm() < 1e-14);
        let s = 1.3;
        let g = analytic_generating(&(sigma_z() * c(s, 0.0))).unwrap();
        assert!((g - c(s.sinh() / s, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn series_branch_matches_direct_formula() {
        for x in [c(9e-7, 0.0), c(-5e-7, 4e-7), c(0.0, 9.9e-7)] {
            let s = x.sqrt();
            assert!((sinhc_value(x) - s.sinh() / s).norm() < 1e-12);
        }
    }

    #[test]
    fn bloch_states_reproduce_projector() {
        let s = pauli();
        for v in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [0.6, -0.8, 0.0], [0.48, 0.6, -0.64]] {
            let rho = projector(&bloch_state(v));
            let expect = (identity(2) + &s[0] * c(v[0], 0.0) + &s[1] * c(v[1], 0.0) + &s[2] * c(v[2], 0.0)) * c(0.5, 0.0);
            assert!(crate::matrix::max_abs_diff(&rho, &expect) < 1e-15);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_sphere_vectors(1000, 5).unwrap();
        let b = sample_sphere_vectors(1000, 5).unwrap();
        assert_eq!(a, b);
        assert!(sample_sphere_vectors(0, 5).is_err());
        for v in &a {
            assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn second_order_ode_of_sinhc() {
        for k in 0..100 {
            let x = -4.0 + 8.0 * k as f64 / 99.0;
            let (f, f1, f2) = sinhc_sqrt(c(x, 0.0));
            let resid = c(x, 0.0) * f2 + f1 * 1.5 - f * 0.25;
            assert!(resid.norm() < 1e-10, "x = {x}: {resid}");
        }
    }
}
