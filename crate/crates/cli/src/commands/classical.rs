// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! `ensemble`, `spin` and `check-descent`.

use noisetensor::ensemble::{generating_descent_defects, EnsembleJson, WeightedEnsemble};
use noisetensor::io::{CheckRecord, CsvTable};
use noisetensor::matrix::{c, identity, sigma_x, sigma_y, sigma_z};
use noisetensor::qtensor::{BipartiteJson, BipartiteState};
use noisetensor::spin::{analytic_generating, analytic_tensor, sample_sphere};
use noisetensor::{ComplexMatrix, PairTensor};
use serde::{Deserialize, Serialize};

use super::{classical_checks, load, order, quantum_chain_checks, seed, tolerance, Snapshot, IDENTITY_TOL, STAT_FLOOR, STAT_SIGMAS};
use crate::error::CliError;
use crate::report::Report;
use crate::Common;

/// Finite-difference step for generating-function derivatives.
const FD_STEP: f64 = 1e-2;
/// Tolerance of the finite-difference descent identities.
const FD_TOL: f64 = 1e-6;
/// Highest order with a closed-form spin tensor.
const SPIN_MAX_ORDER: usize = 3;

/// Sampling settings of the isotropic spin ensemble.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SpinJson {
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub batches: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// `check-descent` input, selected by `kind`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DescentJson {
    Ensemble(EnsembleJson),
    Spin(SpinJson),
    Bipartite(BipartiteJson),
}

fn ensemble_tensors(ens: &WeightedEnsemble, n: usize) -> Result<Vec<PairTensor>, CliError> {
    Ok((1..=n).map(|k| ens.density_tensor(k)).collect::<Result<_, _>>()?)
}

pub fn ensemble(common: &Common) -> Result<Report, CliError> {
    let json: EnsembleJson = load(common)?;
    let ens = WeightedEnsemble::from_json(&json)?;
    let n = order(common, None, 2)?;
    let tol = tolerance(common, IDENTITY_TOL)?;
    let tensors = ensemble_tensors(&ens, n)?;
    let mut report = Report::new();
    for (k, t) in tensors.iter().enumerate() {
        report.json_compact(&format!("ensemble_order_{}.json", k + 1), &Snapshot::exact(None, t))?;
    }
    classical_checks(&mut report, "ensemble", "ensemble", &tensors, tol)?;
    Ok(report)
}

/// Fixed complex sources for the generating-function identities.
fn spin_sources() -> Vec<ComplexMatrix> {
    vec![
        sigma_x() * c(0.3, 0.1) + sigma_z() * c(-0.2, 0.0),
        sigma_y() * c(0.4, -0.2) + identity(2) * c(0.1, 0.3),
        sigma_x() * c(-0.5, 0.0) + sigma_y() * c(0.0, 0.25) + sigma_z() * c(0.6, 0.2),
    ]
}

fn spin_closed_form(report: &mut Report, n: usize, tol: f64) -> Result<Vec<PairTensor>, CliError> {
    let exact: Vec<PairTensor> = (1..=n).map(analytic_tensor).collect::<Result<_, _>>()?;
    classical_checks(report, "spin", "closed_form", &exact, tol)?;
    let (mut trace_gap, mut chain_gap): (f64, f64) = (0.0, 0.0);
    for a in spin_sources() {
        let (t, ch) = generating_descent_defects(|s| analytic_generating(s).expect("2×2 source"), &a, FD_STEP);
        trace_gap = trace_gap.max(t);
        chain_gap = chain_gap.max(ch);
    }
    report.check(CheckRecord::at_most(
        "generating_trace_descent",
        "spin",
        "generating-function trace descent",
        trace_gap,
        FD_TOL,
    ));
    report.check(CheckRecord::at_most(
        "generating_chain_descent",
        "spin",
        "generating-function chain descent",
        chain_gap,
        FD_TOL,
    ));
    Ok(exact)
}

fn spin_sampled(report: &mut Report, common: &Common, json: &SpinJson, exact: &[PairTensor], tol: f64) -> Result<(), CliError> {
    let samples = common
        .traj
        .or(json.samples)
        .ok_or_else(|| CliError::Usage("the spin ensemble needs a sample count (--traj or `samples`)".into()))?;
    let seed = seed(common, json.seed)?;
    let batches = json.batches.unwrap_or(100);
    let ens = sample_sphere(samples, seed)?;
    let mut table = CsvTable::new(
        ["order", "index", "mean_re", "mean_im", "stderr_re", "stderr_im", "exact_re", "exact_im"]
            .map(String::from)
            .to_vec(),
    );
    let mut means = Vec::new();
    for (k, reference) in exact.iter().enumerate().map(|(i, t)| (i + 1, t)) {
        let est = ens.density_tensor_with_errors(k, batches)?;
        for (i, (m, r)) in est.mean.entries().iter().zip(reference.entries()).enumerate() {
            table.push(vec![k as f64, i as f64, m.re, m.im, est.stderr_re[i], est.stderr_im[i], r.re, r.im]);
        }
        report.check(CheckRecord::at_most(
            &format!("sampled_matches_closed_form_order_{k}"),
            "spin",
            "isotropic closed form",
            est.max_z_score(reference, STAT_FLOOR),
            STAT_SIGMAS,
        ));
        report.json_compact(&format!("spin_order_{k}.json"), &Snapshot::estimate(None, &est))?;
        means.push(est.mean);
    }
    report.csv("spin.csv", &table);
    classical_checks(report, "spin", "sampled", &means, tol)
}

pub fn spin(common: &Common) -> Result<Report, CliError> {
    let json: SpinJson = if common.input.is_some() { load(common)? } else { SpinJson::default() };
    let n = order(common, None, SPIN_MAX_ORDER)?;
    let tol = tolerance(common, IDENTITY_TOL)?;
    let mut report = Report::new();
    let exact = spin_closed_form(&mut report, n, tol)?;
    spin_sampled(&mut report, common, &json, &exact, tol)?;
    Ok(report)
}

pub fn check_descent(common: &Common) -> Result<Report, CliError> {
    let json: DescentJson = load(common)?;
    let n = order(common, None, 3)?;
    let tol = tolerance(common, IDENTITY_TOL)?;
    let mut report = Report::new();
    match json {
        DescentJson::Ensemble(e) => {
            let tensors = ensemble_tensors(&WeightedEnsemble::from_json(&e)?, n)?;
            classical_checks(&mut report, "ensemble", "ensemble", &tensors, tol)?;
        }
        DescentJson::Spin(s) => {
            let exact = spin_closed_form(&mut report, n, tol)?;
            if s.samples.is_some() || common.traj.is_some() {
                spin_sampled(&mut report, common, &s, &exact, tol)?;
            }
        }
        DescentJson::Bipartite(b) => {
            let state = BipartiteState::from_json(&b)?;
            if !state.is_pure() {
                return Err(CliError::Usage("chain descent of trace tensors needs a pure bipartite state".into()));
            }
            let tensors: Vec<PairTensor> = (1..=n).map(|k| state.trace_tensor(k)).collect::<Result<_, _>>()?;
            let trace = tensors[0].to_matrix()?.trace();
            report.check(CheckRecord::at_most("trace_unit_trace", "qtensor", "unit trace", (trace - 1.0).norm(), tol));
            quantum_chain_checks(&mut report, "qtensor", "trace", &tensors, tol)?;
        }
    }
    Ok(report)
}
