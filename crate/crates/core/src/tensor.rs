// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense pair-indexed tensors.
//!
//! An order-`n` tensor over a `d`-dimensional space stores `d^{2n}` complex
//! entries indexed by `(i₀ j₀, i₁ j₁, …, i_{n−1} j_{n−1})`. Storage is
//! row-major over the flattened positions, so pair `ℓ` (0-based) occupies
//! positions `2ℓ` and `2ℓ+1` and the first pair is the most significant.
//! Equivalently, the flat index is the base-`d²` number whose digits are the
//! pair codes `i·d + j`.

use std::env;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64, ONE, ZERO};

/// Environment variable that caps tensor storage, in MiB.
pub const BUDGET_ENV: &str = "NOISETENSOR_BUDGET_MB";
pub const DEFAULT_BUDGET_MB: u64 = 64;

const ENTRY_BYTES: u128 = std::mem::size_of::<C64>() as u128;

/// Current memory budget in bytes.
pub fn budget_bytes() -> u64 {
    env::var(BUDGET_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<u64>().ok())
        .unwrap_or(DEFAULT_BUDGET_MB)
        .saturating_mul(1 << 20)
}

/// Number of entries of an order-`order` tensor, or an error when it does not
/// fit in the budget.
pub fn checked_len(order: usize, dim: usize) -> Result<usize> {
    let entries = (dim as u128)
        .checked_pow(2 * order as u32)
        .unwrap_or(u128::MAX);
    let budget = budget_bytes();
    if entries.saturating_mul(ENTRY_BYTES) > budget as u128 {
        return Err(Error::BudgetExceeded {
            entries,
            budget_bytes: budget,
        });
    }
    Ok(entries as usize)
}

/// Symmetry class of a density tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// Invariant under every permutation of index pairs.
    Classical,
    /// Invariant under cyclic permutations of index pairs only.
    Quantum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairTensor {
    order: usize,
    dim: usize,
    flavor: Flavor,
    entries: Vec<C64>,
}

/// Visits every multi-index of `positions` digits in base `dim`, in
/// row-major order.
pub fn for_each_index(positions: usize, dim: usize, mut f: impl FnMut(usize, &[usize])) {
    let mut idx = vec![0usize; positions];
    let total = dim.pow(positions as u32);
    for flat in 0..total {
        f(flat, &idx);
        for p in (0..positions).rev() {
            idx[p] += 1;
            if idx[p] < dim {
                break;
            }
            idx[p] = 0;
        }
    }
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(factorial(n));
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

/// Sign of a permutation.
pub fn parity(perm: &[usize]) -> f64 {
    let mut inversions = 0;
    for a in 0..perm.len() {
        for b in a + 1..perm.len() {
            if perm[a] > perm[b] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl PairTensor {
    pub fn zeros(order: usize, dim: usize, flavor: Flavor) -> Result<Self> {
        if order == 0 {
            return Err(Error::OrderTooSmall(0));
        }
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let len = checked_len(order, dim)?;
        Ok(Self {
            order,
            dim,
            flavor,
            entries: vec![ZERO; len],
        })
    }

    /// Builds a tensor from its flattened entries.
    pub fn from_entries(order: usize, dim: usize, flavor: Flavor, entries: Vec<C64>) -> Result<Self> {
        let len = checked_len(order, dim)?;
        if order == 0 {
            return Err(Error::OrderTooSmall(0));
        }
        if entries.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "order {order}, dim {dim} needs {len} entries, got {}",
                entries.len()
            )));
        }
        Ok(Self {
            order,
            dim,
            flavor,
            entries,
        })
    }

    /// Evaluates `f` on every multi-index `(i₀, j₀, i₁, j₁, …)`.
    pub fn from_fn(
        order: usize,
        dim: usize,
        flavor: Flavor,
        mut f: impl FnMut(&[usize]) -> C64,
    ) -> Result<Self> {
        let mut t = Self::zeros(order, dim, flavor)?;
        let entries = &mut t.entries;
        for_each_index(2 * order, dim, |flat, idx| entries[flat] = f(idx));
        Ok(t)
    }

    /// `m₀ ⊗ m₁ ⊗ …`: entry `Π_ℓ (m_ℓ)_{iℓ jℓ}`.
    pub fn outer_product(mats: &[ComplexMatrix], flavor: Flavor) -> Result<Self> {
        let first = mats.first().ok_or(Error::OrderTooSmall(0))?;
        let dim = first.nrows();
        if mats.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::DimensionMismatch(
                "outer product factors must share one square shape".into(),
            ));
        }
        checked_len(mats.len(), dim)?;
        let mut entries = vec![ONE];
        for m in mats {
            entries = extend_outer(&entries, &pair_codes(m));
        }
        Self::from_entries(mats.len(), dim, flavor, entries)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn with_flavor(mut self, flavor: Flavor) -> Self {
        self.flavor = flavor;
        self
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.entries
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Flat offset of a multi-index `(i₀, j₀, i₁, j₁, …)`.
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), 2 * self.order);
        idx.iter().fold(0, |acc, &k| acc * self.dim + k)
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.entries[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: C64) {
        let o = self.offset(idx);
        self.entries[o] = value;
    }

    /// Decodes a flat offset into its multi-index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; 2 * self.order];
        for p in (0..2 * self.order).rev() {
            idx[p] = flat % self.dim;
            flat /= self.dim;
        }
        idx
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.order {
            Err(Error::SlotOutOfRange {
                slot,
                order: self.order,
            })
        } else {
            Ok(())
        }
    }

    /// Contracts the row and column index of `slot`: `Σ_k T[…, (k k)_slot, …]`.
    pub fn contract_trace(&self, slot: usize) -> Result<Self> {
        if self.order < 2 {
            return Err(Error::OrderTooSmall(self.order));
        }
        self.check_slot(slot)?;
        let d = self.dim;
        let dd = d * d;
        let inner = dd.pow((self.order - 1 - slot) as u32);
        let outer = dd.pow(slot as u32);
        let mut out = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            for r in 0..inner {
                let mut acc = ZERO;
                for k in 0..d {
                    acc += self.entries[(o * dd + k * d + k) * inner + r];
                }
                out.push(acc);
            }
        }
        Self::from_entries(self.order - 1, d, self.flavor, out)
    }

    /// Contracts the column index of slot `from` with the row index of slot
    /// `to`. The merged pair `(i_from, j_to)` takes the position of the lower
    /// of the two slots and the other slot is removed. Quantum tensors only
    /// admit `to = from + 1` cyclically.
    pub fn contract_chain(&self, from: usize, to: usize) -> Result<Self> {
        if self.order < 2 {
            return Err(Error::OrderTooSmall(self.order));
        }
        self.check_slot(from)?;
        self.check_slot(to)?;
        let n = self.order;
        if from == to
            || (self.flavor == Flavor::Quantum && to != (from + 1) % n)
        {
            return Err(Error::NonAdjacentSlots { from, to, order: n });
        }
        let d = self.dim;
        let keep = from.min(to);
        let drop = from.max(to);
        let mut full = vec![0usize; 2 * n];
        let mut out = Vec::with_capacity(d.pow(2 * (n as u32 - 1)));
        for_each_index(2 * (n - 1), d, |_, r| {
            // scatter the reduced index back into the full index
            let mut s = 0;
            for slot in 0..n {
                if slot == drop {
                    continue;
                }
                full[2 * slot] = r[2 * s];
                full[2 * slot + 1] = r[2 * s + 1];
                s += 1;
            }
            let (a, b) = (full[2 * keep], full[2 * keep + 1]);
            let mut acc = ZERO;
            for cidx in 0..d {
                full[2 * from] = a;
                full[2 * from + 1] = cidx;
                full[2 * to] = cidx;
                full[2 * to + 1] = b;
                acc += self.entries[full.iter().fold(0, |x, &k| x * d + k)];
            }
            out.push(acc);
        });
        Self::from_entries(n - 1, d, self.flavor, out)
    }

    /// Reorders the pairs: pair `k` of the result is pair `perm[k]` of `self`.
    pub fn permute_slots(&self, perm: &[usize]) -> Result<Self> {
        let n = self.order;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidInput(format!("{perm:?} is not a permutation of 0..{n}")));
        }
        let dd = self.dim * self.dim;
        let mut out = vec![ZERO; self.entries.len()];
        let mut codes = vec![0usize; n];
        for (flat, &value) in self.entries.iter().enumerate() {
            let mut f = flat;
            for slot in (0..n).rev() {
                codes[slot] = f % dd;
                f /= dd;
            }
            let target = perm.iter().fold(0, |acc, &p| acc * dd + codes[p]);
            out[target] = value;
        }
        Self::from_entries(n, self.dim, self.flavor, out)
    }

    fn group(&self) -> Vec<Vec<usize>> {
        let n = self.order;
        match self.flavor {
            Flavor::Classical => permutations(n),
            Flavor::Quantum => (0..n).map(|s| (0..n).map(|k| (k + s) % n).collect()).collect(),
        }
    }

    /// Average over the flavor's symmetry group, each image weighted by
    /// `weight(perm)`.
    fn group_average(&self, group: &[Vec<usize>], weight: impl Fn(&[usize]) -> f64) -> Self {
        let mut acc = vec![ZERO; self.entries.len()];
        for perm in group {
            let w = weight(perm);
            let img = self.permute_slots(perm).expect("group elements are permutations");
            for (a, v) in acc.iter_mut().zip(img.entries) {
                *a += v * w;
            }
        }
        let scale = 1.0 / group.len() as f64;
        acc.iter_mut().for_each(|a| *a *= scale);
        Self {
            entries: acc,
            ..self.clone()
        }
    }

    /// Largest deviation from the average over the flavor's symmetry group.
    pub fn symmetry_defect(&self) -> f64 {
        self.max_abs_diff(&self.group_average(&self.group(), |_| 1.0))
    }

    /// Largest deviation from the fully permutation-symmetrized tensor,
    /// regardless of flavor.
    pub fn full_symmetry_defect(&self) -> f64 {
        self.max_abs_diff(&self.symmetric_part())
    }

    /// Projection onto the fully symmetric subspace of pair permutations.
    pub fn symmetric_part(&self) -> Self {
        self.group_average(&permutations(self.order), |_| 1.0)
    }

    /// Projection onto the fully antisymmetric subspace of pair permutations.
    pub fn antisymmetric_part(&self) -> Self {
        self.group_average(&permutations(self.order), parity)
    }

    /// The Hermitian-conjugate image: entries conjugated with every pair
    /// swapped, and the pair order reversed for the quantum flavor.
    pub fn adjoint(&self) -> Self {
        let n = self.order;
        let d = self.dim;
        let reverse = self.flavor == Flavor::Quantum;
        let mut out = vec![ZERO; self.entries.len()];
        let mut src = vec![0usize; 2 * n];
        for_each_index(2 * n, d, |flat, idx| {
            for slot in 0..n {
                let from = if reverse { n - 1 - slot } else { slot };
                src[2 * from] = idx[2 * slot + 1];
                src[2 * from + 1] = idx[2 * slot];
            }
            out[flat] = self.entries[src.iter().fold(0, |x, &k| x * d + k)].conj();
        });
        Self {
            entries: out,
            ..self.clone()
        }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `Σ T[i₀j₀,…] Π_ℓ (ops_ℓ)_{jℓ iℓ}`, the expectation of `ops₀ ⊗ ops₁ ⊗ …`.
    pub fn contract_with(&self, ops: &[ComplexMatrix]) -> Result<C64> {
        if ops.len() != self.order || ops.iter().any(|o| o.nrows() != self.dim || o.ncols() != self.dim) {
            return Err(Error::DimensionMismatch(
                "need one d×d operator per slot".into(),
            ));
        }
        let transposed: Vec<ComplexMatrix> = ops.iter().map(|o| o.transpose()).collect();
        let weights = Self::outer_product(&transposed, self.flavor)?;
        Ok(self
            .entries
            .iter()
            .zip(&weights.entries)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Entry-wise `max |self − other|`; infinite when shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.order != other.order || self.dim != other.dim {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: C64, other: &Self) -> Result<()> {
        if self.order != other.order || self.dim != other.dim {
            return Err(Error::DimensionMismatch("tensor shapes differ".into()));
        }
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: C64) {
        self.entries.iter_mut().for_each(|a| *a *= alpha);
    }

    /// Order-1 tensor viewed as a `d×d` matrix.
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.order != 1 {
            return Err(Error::InvalidInput(format!(
                "order-{} tensor is not a matrix",
                self.order
            )));
        }
        Ok(ComplexMatrix::from_row_slice(self.dim, self.dim, &self.entries))
    }

    pub fn from_matrix(m: &ComplexMatrix, flavor: Flavor) -> Result<Self> {
        Self::outer_product(std::slice::from_ref(m), flavor)
    }

    pub fn to_json(&self) -> TensorJson {
        TensorJson {
            order: self.order,
            dim: self.dim,
            flavor: self.flavor,
            entries: self.entries.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_json(json: &TensorJson) -> Result<Self> {
        Self::from_entries(
            json.order,
            json.dim,
            json.flavor,
            json.entries.iter().map(|&[re, im]| C64::new(re, im)).collect(),
        )
    }
}

/// Pair codes `i·d + j` of a matrix, in row-major order.
pub fn pair_codes(m: &ComplexMatrix) -> Vec<C64> {
    let d = m.nrows();
    let mut v = Vec::with_capacity(d * m.ncols());
    for i in 0..d {
        for j in 0..m.ncols() {
            v.push(m[(i, j)]);
        }
    }
    v
}

/// Appends one slot to a flattened product: `out[a·len(b) + e] = a_k · b_e`.
pub fn extend_outer(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        out.extend(b.iter().map(|&y| x * y));
    }
    out
}

/// Accumulates `weight · Π_ℓ codes` into `acc`, where every slot shares the
/// same pair codes. `scratch` must hold `acc.len()` entries.
pub fn accumulate_power(acc: &mut [C64], codes: &[C64], weight: f64, scratch: &mut Vec<C64>) {
    scratch.clear();
    scratch.push(C64::new(weight, 0.0));
    while scratch.len() < acc.len() {
        let prev = std::mem::take(scratch);
        *scratch = extend_outer(&prev, codes);
    }
    for (a, s) in acc.iter_mut().zip(scratch.iter()) {
        *a += s;
    }
}

/// Serialized tensor: entries are `[re, im]` pairs in row-major order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorJson {
    pub order: usize,
    pub dim: usize,
    pub flavor: Flavor,
    pub entries: Vec<[f64; 2]>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{c, random_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(order: usize, dim: usize, flavor: Flavor, seed: u64) -> PairTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng, dim.pow(2 * order as u32), 1);
        PairTensor::from_entries(order, dim, flavor, m.iter().cloned().collect()).unwrap()
    }

    #[test]
    fn offsets_round_trip() {
        let t = random_tensor(3, 3, Flavor::Classical, 1);
        for flat in [0, 17, 200, t.len() - 1] {
            assert_eq!(t.offset(&t.multi_index(flat)), flat);
        }
    }

    #[test]
    fn trace_contraction_matches_loop() {
        for (order, dim) in [(2, 2), (2, 4), (3, 2), (3, 3)] {
            let t = random_tensor(order, dim, Flavor::Classical, 7);
            for slot in 0..order {
                let got = t.contract_trace(slot).unwrap();
                let expect = PairTensor::from_fn(order - 1, dim, Flavor::Classical, |r| {
                    let mut full: Vec<usize> = r.to_vec();
                    full.splice(2 * slot..2 * slot, [0, 0]);
                    (0..dim)
                        .map(|k| {
                            full[2 * slot] = k;
                            full[2 * slot + 1] = k;
                            t.get(&full)
                        })
                        .sum()
                })
                .unwrap();
                assert!(got.max_abs_diff(&expect) < 1e-12);
            }
        }
    }

    #[test]
    fn chain_contraction_of_order_two() {
        // (A⊗B) chained from 0 to 1 is the matrix product AB
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 3, 3);
        let b = random_matrix(&mut rng, 3, 3);
        let t = PairTensor::outer_product(&[a.clone(), b.clone()], Flavor::Quantum).unwrap();
        let ab = t.contract_chain(0, 1).unwrap().to_matrix().unwrap();
        assert!(crate::matrix::max_abs_diff(&ab, &(&a * &b)) < 1e-12);
        let ba = t.contract_chain(1, 0).unwrap().to_matrix().unwrap();
        assert!(crate::matrix::max_abs_diff(&ba, &(&b * &a)) < 1e-12);
    }

    #[test]
    fn chain_rules() {
        let q = random_tensor(3, 2, Flavor::Quantum, 3);
        assert!(matches!(q.contract_chain(0, 2), Err(Error::NonAdjacentSlots { .. })));
        assert!(q.contract_chain(2, 0).is_ok());
        let one = random_tensor(1, 2, Flavor::Classical, 3);
        assert!(matches!(one.contract_chain(0, 0), Err(Error::OrderTooSmall(1))));
        assert!(matches!(one.contract_trace(0), Err(Error::OrderTooSmall(1))));
        assert!(matches!(q.contract_trace(3), Err(Error::SlotOutOfRange { .. })));
    }

    #[test]
    fn symmetry_defect_detects_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_matrix(&mut rng, 2, 2);
        let mut t = PairTensor::outer_product(&[m.clone(), m.clone(), m], Flavor::Classical).unwrap();
        assert!(t.symmetry_defect() < 1e-14);
        let eps = 1e-3;
        // (00, 01, 11) has a six-element orbit
        let idx = [0, 0, 0, 1, 1, 1];
        let v = t.get(&idx);
        t.set(&idx, v + c(eps, 0.0));
        assert!(t.symmetry_defect() >= eps / 2.0);
    }

    #[test]
    fn symmetric_and_antisymmetric_parts() {
        let t = random_tensor(3, 2, Flavor::Quantum, 5);
        let s = t.symmetric_part();
        let a = t.antisymmetric_part();
        assert!(s.full_symmetry_defect() < 1e-14);
        let swapped = a.permute_slots(&[1, 0, 2]).unwrap();
        let mut sum = swapped;
        sum.axpy(ONE, &a).unwrap();
        assert!(sum.max_abs() < 1e-14);
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            PairTensor::zeros(12, 8, Flavor::Classical),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let t = random_tensor(2, 2, Flavor::Quantum, 6);
        let s = serde_json::to_string(&t.to_json()).unwrap();
        let back = PairTensor::from_json(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
