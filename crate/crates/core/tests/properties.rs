// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Randomized invariants of tensor contractions, ensemble tensors and
//! environment-trace tensors, checked against brute-force index loops.

use noisetensor::ensemble::WeightedEnsemble;
use noisetensor::qtensor::BipartiteState;
use noisetensor::{Flavor, PairTensor, StateVector, C64};
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

/// Random tensor of order 2 or 3 and dimension 2 or 3.
fn tensor(flavor: Flavor) -> impl Strategy<Value = PairTensor> {
    (2usize..=3, 2usize..=3).prop_flat_map(move |(order, dim)| {
        prop::collection::vec(complex(), dim.pow(2 * order as u32))
            .prop_map(move |e| PairTensor::from_entries(order, dim, flavor, e).unwrap())
    })
}

/// Normalized state of the given dimension, away from the zero vector.
fn state(dim: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec(complex(), dim)
        .prop_filter("nonzero", |v| v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let s = StateVector::from_vec(v);
            let n = s.norm();
            s / C64::new(n, 0.0)
        })
}

fn ensemble() -> impl Strategy<Value = WeightedEnsemble> {
    (2usize..=3, 1usize..=4).prop_flat_map(|(dim, m)| {
        (prop::collection::vec(0.05..1.0f64, m), prop::collection::vec(state(dim), m)).prop_map(move |(w, s)| {
            let total: f64 = w.iter().sum();
            WeightedEnsemble::new(dim, w.iter().map(|x| x / total).zip(s).collect()).unwrap()
        })
    })
}

/// Every multi-index of `positions` digits in base `dim`.
fn indices(positions: usize, dim: usize) -> Vec<Vec<usize>> {
    let mut all = vec![vec![]];
    for _ in 0..positions {
        all = all
            .into_iter()
            .flat_map(|p| {
                (0..dim).map(move |k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    all
}

/// Inserts the removed pair back so that `reduced` addresses the full tensor.
fn expand(reduced: &[usize], removed: usize, pair: [usize; 2]) -> Vec<usize> {
    let mut full = reduced[..2 * removed].to_vec();
    full.extend(pair);
    full.extend(&reduced[2 * removed..]);
    full
}

fn trace_oracle(t: &PairTensor, slot: usize) -> PairTensor {
    let (n, d) = (t.order(), t.dim());
    let mut out = PairTensor::zeros(n - 1, d, t.flavor()).unwrap();
    for r in indices(2 * (n - 1), d) {
        let v = (0..d).map(|k| t.get(&expand(&r, slot, [k, k]))).sum();
        out.set(&r, v);
    }
    out
}

fn chain_oracle(t: &PairTensor, from: usize, to: usize) -> PairTensor {
    let (n, d) = (t.order(), t.dim());
    let (keep, drop) = (from.min(to), from.max(to));
    let mut out = PairTensor::zeros(n - 1, d, t.flavor()).unwrap();
    for r in indices(2 * (n - 1), d) {
        let (a, b) = (r[2 * keep], r[2 * keep + 1]);
        let mut v = C64::new(0.0, 0.0);
        for k in 0..d {
            let mut full = expand(&r, drop, [0, 0]);
            full[2 * from] = a;
            full[2 * from + 1] = k;
            full[2 * to] = k;
            full[2 * to + 1] = b;
            v += t.get(&full);
        }
        out.set(&r, v);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_contraction_matches_index_loop(t in tensor(Flavor::Classical), slot in 0usize..3) {
        let slot = slot % t.order();
        prop_assert!(t.contract_trace(slot).unwrap().max_abs_diff(&trace_oracle(&t, slot)) < TOL);
    }

    #[test]
    fn chain_contraction_matches_index_loop(t in tensor(Flavor::Classical), from in 0usize..3, shift in 1usize..3) {
        let n = t.order();
        let (from, to) = (from % n, (from % n + shift.min(n - 1)) % n);
        prop_assert!(t.contract_chain(from, to).unwrap().max_abs_diff(&chain_oracle(&t, from, to)) < TOL);
    }

    #[test]
    fn quantum_chain_rejects_non_adjacent_slots(t in tensor(Flavor::Quantum)) {
        let n = t.order();
        prop_assert!(t.contract_chain(0, 1).is_ok());
        prop_assert!(t.contract_chain(n - 1, 0).is_ok());
        prop_assert_eq!(t.contract_chain(1, 0).is_ok(), n == 2);
    }

    #[test]
    fn ensemble_tensors_are_hermitian_symmetric_and_descend(ens in ensemble()) {
        let t3 = ens.density_tensor(3).unwrap();
        let t2 = ens.density_tensor(2).unwrap();
        prop_assert!(t3.hermiticity_defect() < TOL);
        prop_assert!(t3.full_symmetry_defect() < TOL);
        for a in 0..3 {
            prop_assert!(t3.contract_trace(a).unwrap().max_abs_diff(&t2) < TOL);
            for b in (0..3).filter(|&b| b != a) {
                prop_assert!(t3.contract_chain(a, b).unwrap().max_abs_diff(&t2) < TOL);
            }
        }
        let trace = ens.density_tensor(1).unwrap().to_matrix().unwrap().trace();
        prop_assert!((trace - 1.0).norm() < TOL);
    }

    #[test]
    fn pure_trace_tensors_are_cyclic_and_descend(psi in state(4)) {
        let st = BipartiteState::from_pure(2, 2, &psi).unwrap();
        let t3 = st.trace_tensor(3).unwrap();
        let t2 = st.trace_tensor(2).unwrap();
        prop_assert!(t3.permute_slots(&[1, 2, 0]).unwrap().max_abs_diff(&t3) < TOL);
        prop_assert!(t3.hermiticity_defect() < TOL);
        for from in 0..3 {
            prop_assert!(t3.contract_chain(from, (from + 1) % 3).unwrap().max_abs_diff(&t2) < TOL);
        }
    }
}
