// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex matrices and the handful of operator helpers every module
//! leans on: commutators, Pauli matrices, state projectors and Hermitian
//! predicates.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type StateVector = DVector<C64>;

/// Absolute tolerance used by every defect predicate unless overridden.
pub const DEFAULT_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn zeros(dim: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(dim, dim)
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `|0⟩⟨1|`: lowers the excited state `|1⟩` to the ground state `|0⟩`.
pub fn sigma_minus() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
}

pub fn sigma_plus() -> ComplexMatrix {
    sigma_minus().adjoint()
}

pub fn pauli() -> [ComplexMatrix; 3] {
    [sigma_x(), sigma_y(), sigma_z()]
}

pub fn basis_state(dim: usize, k: usize) -> StateVector {
    let mut v = StateVector::zeros(dim);
    v[k] = ONE;
    v
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b + b * a
}

/// `|ψ⟩⟨ψ|`.
pub fn projector(psi: &StateVector) -> ComplexMatrix {
    psi * psi.adjoint()
}

/// `⟨ψ|op|ψ⟩`.
pub fn expectation(op: &ComplexMatrix, psi: &StateVector) -> C64 {
    psi.dotc(&(op * psi))
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.trace()
}

/// `Tr(a b)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `max |m − m†|` entrywise.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn is_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    m.is_square() && hermiticity_defect(m) <= tol
}

pub fn is_unit_trace(m: &ComplexMatrix, tol: f64) -> bool {
    (m.trace() - ONE).norm() <= tol
}

pub fn is_symmetric(m: &ComplexMatrix, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.transpose()) <= tol
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    let h = (m + m.adjoint()).scale(0.5);
    h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn is_positive_semidefinite(m: &ComplexMatrix, tol: f64) -> bool {
    is_hermitian(m, tol) && min_eigenvalue(m) >= -tol
}

/// Checks a density matrix: Hermitian, unit trace, positive semidefinite.
pub fn validate_density_matrix(rho: &ComplexMatrix, tol: f64) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "density matrix is {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let herm = hermiticity_defect(rho);
    if herm > tol {
        return Err(Error::NotHermitian(herm));
    }
    if !is_unit_trace(rho, tol) {
        return Err(Error::InvalidInput(format!(
            "density matrix trace is {}",
            rho.trace()
        )));
    }
    let min = min_eigenvalue(rho);
    if min < -tol {
        return Err(Error::InvalidInput(format!(
            "density matrix has negative eigenvalue {min:e}"
        )));
    }
    Ok(())
}

pub fn require_hermitian(m: &ComplexMatrix, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("operator is not square".into()));
    }
    let defect = hermiticity_defect(m);
    if defect > tol {
        Err(Error::NotHermitian(defect))
    } else {
        Ok(())
    }
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// `exp(−i h t)` for Hermitian `h`, via its eigendecomposition.
pub fn unitary_propagator(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let eig = h.clone().symmetric_eigen();
    let phases = ComplexMatrix::from_diagonal(
        &eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * t)),
    );
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Kronecker product `a ⊗ b`; `a` indexes the slow (major) factor.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn normalize(psi: &mut StateVector) {
    let n = psi.norm();
    if n > 0.0 {
        psi.unscale_mut(n);
    }
}

/// `out = m · x` for small dense operators, without allocation.
#[inline]
pub fn matvec_into(m: &ComplexMatrix, x: &[C64], out: &mut [C64]) {
    let n = m.nrows();
    let cols = m.ncols();
    let data = m.as_slice();
    out[..n].iter_mut().for_each(|o| *o = ZERO);
    // column-major storage
    for (col, &xc) in x.iter().enumerate().take(cols) {
        if xc == ZERO {
            continue;
        }
        let column = &data[col * n..(col + 1) * n];
        for (o, &a) in out.iter_mut().zip(column) {
            *o += a * xc;
        }
    }
}

#[inline]
pub fn dotc(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// Haar-random unit vector.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
    let mut v = StateVector::from_fn(dim, |_, _| complex_gaussian(rng));
    normalize(&mut v);
    v
}

/// Hermitian matrix with Gaussian entries of unit scale.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
    (&g + g.adjoint()).scale(0.5)
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Full-rank random density matrix `G G† / Tr(G G†)`.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = random_matrix(rng, dim, dim);
    let m = &g * g.adjoint();
    let tr = m.trace();
    m / tr
}
