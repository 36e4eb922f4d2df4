// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! `qtensor`, `master` and `collisional`.

use noisetensor::io::{matrix_from_json, CheckRecord, CsvTable, MatrixJson};
use noisetensor::master::{
    descent_defect, integrate_hierarchy, collisional::CollisionalJson, Collisional, Generator, MasterModel, MasterSpec, RkConfig,
};
use noisetensor::matrix::{c, hermiticity_defect, identity, kron, projector, unitary_propagator, validate_density_matrix};
use noisetensor::qtensor::{pointer_rate_bound, pointer_variance, pointer_variance_rate, BipartiteJson, BipartiteState};
use noisetensor::{ComplexMatrix, Flavor, PairTensor};
use serde::{Deserialize, Serialize};

use super::{initial_state, load, order, quantum_chain_checks, tolerance, Snapshot, IDENTITY_TOL};
use crate::error::CliError;
use crate::report::Report;
use crate::Common;

/// Default RK4 step of hierarchy integration.
const DEFAULT_DT: f64 = 1e-3;
/// Largest accepted Richardson error estimate of an integration.
const INTEGRATION_TOL: f64 = 1e-6;
/// Descent tolerance of the truncated oscillator generator.
const TRUNCATION_TOL: f64 = 1e-8;
/// Time step of the finite-difference pointer-rate oracle.
const POINTER_FD_STEP: f64 = 1e-5;
/// Tolerance of the finite-difference pointer-rate oracle.
const POINTER_FD_TOL: f64 = 1e-6;
/// Relative slack of the uncertainty bound on the pointer rate.
const BOUND_SLACK: f64 = 1e-12;

/// Hamiltonian pieces for the pointer-observable rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointerJson {
    pub h_sys: MatrixJson,
    pub h_env: MatrixJson,
    pub h_int: MatrixJson,
}

/// `{state, observable?, pointer?}`; `pointer` needs `observable`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QTensorJson {
    pub state: BipartiteJson,
    #[serde(default)]
    pub observable: Option<MatrixJson>,
    #[serde(default)]
    pub pointer: Option<PointerJson>,
}

#[derive(Debug, Serialize)]
struct PointerReport {
    variance: f64,
    rate: f64,
    finite_difference_rate: f64,
    bound: f64,
}

fn cyclic_shift(n: usize) -> Vec<usize> {
    (0..n).map(|k| (k + 1) % n).collect()
}

pub fn qtensor(common: &Common) -> Result<Report, CliError> {
    let json: QTensorJson = load(common)?;
    let state = BipartiteState::from_json(&json.state)?;
    let n = order(common, None, 3)?;
    let tol = tolerance(common, IDENTITY_TOL)?;
    let mut report = Report::new();
    let tensors: Vec<PairTensor> = (1..=n).map(|k| state.trace_tensor(k)).collect::<Result<_, _>>()?;
    for (k, t) in tensors.iter().enumerate().map(|(i, t)| (i + 1, t)) {
        report.json_compact(&format!("trace_tensor_order_{k}.json"), &Snapshot::exact(None, t))?;
        report.check(CheckRecord::at_most(
            &format!("hermiticity_order_{k}"),
            "qtensor",
            "trace tensor hermiticity",
            t.hermiticity_defect(),
            tol,
        ));
        report.check(CheckRecord::at_most(
            &format!("cyclic_symmetry_order_{k}"),
            "qtensor",
            "cyclicity of the environment trace",
            t.permute_slots(&cyclic_shift(k))?.max_abs_diff(t),
            tol,
        ));
    }
    let trace = tensors[0].to_matrix()?.trace();
    report.check(CheckRecord::at_most("unit_trace", "qtensor", "unit trace", (trace - 1.0).norm(), tol));
    if state.is_pure() {
        quantum_chain_checks(&mut report, "qtensor", "trace", &tensors, tol)?;
    } else {
        log::info!("mixed bipartite state: chain descent does not apply");
    }
    let Some(a_json) = &json.observable else {
        if json.pointer.is_some() {
            return Err(CliError::Usage("`pointer` needs an `observable`".into()));
        }
        return Ok(report);
    };
    let a = matrix_from_json(a_json)?;
    let direct = state.environment_fluctuation(&a)?;
    let from_tensors = state.environment_fluctuation_from_tensors(&a)?;
    report.check(CheckRecord::at_most(
        "fluctuation_forms_agree",
        "qtensor",
        "environment fluctuation from trace tensors",
        (direct - from_tensors).abs(),
        tol,
    ));
    if let Some(p) = &json.pointer {
        pointer_checks(&mut report, &state, p, &a)?;
    }
    Ok(report)
}

fn pointer_checks(report: &mut Report, state: &BipartiteState, p: &PointerJson, a: &ComplexMatrix) -> Result<(), CliError> {
    let (h_sys, h_env, h_int) = (matrix_from_json(&p.h_sys)?, matrix_from_json(&p.h_env)?, matrix_from_json(&p.h_int)?);
    let rate = pointer_variance_rate(state, &h_sys, &h_env, &h_int, a)?;
    let bound = pointer_rate_bound(state, &h_sys, a);
    let (de, ds) = (state.env_dim(), state.sys_dim());
    let h_tot = kron(&identity(de), &h_sys) + kron(&h_env, &identity(ds)) + &h_int;
    let var_at = |t: f64| -> Result<f64, CliError> {
        let u = unitary_propagator(&h_tot, t);
        let rho = &u * state.rho() * u.adjoint();
        Ok(pointer_variance(&BipartiteState::new(de, ds, rho, state.is_pure())?, a))
    };
    let fd = (var_at(POINTER_FD_STEP)? - var_at(-POINTER_FD_STEP)?) / (2.0 * POINTER_FD_STEP);
    report.json(
        "pointer.json",
        &PointerReport {
            variance: pointer_variance(state, a),
            rate,
            finite_difference_rate: fd,
            bound,
        },
    )?;
    report.check(CheckRecord::at_most(
        "pointer_rate_matches_unitary_evolution",
        "qtensor",
        "pointer variance rate",
        (rate - fd).abs(),
        POINTER_FD_TOL,
    ));
    report.check(CheckRecord::at_most(
        "pointer_rate_within_bound",
        "qtensor",
        "uncertainty bound on the pointer rate",
        rate.abs() - bound,
        BOUND_SLACK * bound.max(1.0),
    ));
    Ok(())
}

/// `{spec, rho0, times, dt?, n?}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MasterJson {
    pub spec: MasterSpec,
    pub rho0: MatrixJson,
    pub times: Vec<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub n: Option<usize>,
}

fn matrix_csv(times: &[f64], mats: &[ComplexMatrix]) -> CsvTable {
    let d = mats.first().map_or(0, |m| m.nrows());
    let mut header = vec!["t".to_string()];
    for i in 0..d {
        for j in 0..d {
            header.push(format!("rho_{i}_{j}_re"));
            header.push(format!("rho_{i}_{j}_im"));
        }
    }
    let mut table = CsvTable::new(header);
    for (t, m) in times.iter().zip(mats) {
        let mut row = vec![*t];
        for i in 0..d {
            for j in 0..d {
                row.extend([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        table.push(row);
    }
    table
}

fn validate_times(times: &[f64]) -> Result<(), CliError> {
    if times.is_empty() || times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(CliError::Usage("`times` must be a nonempty nondecreasing list of finite numbers".into()));
    }
    Ok(())
}

pub fn master(common: &Common) -> Result<Report, CliError> {
    let json: MasterJson = load(common)?;
    let rho0 = matrix_from_json(&json.rho0)?;
    validate_density_matrix(&rho0, IDENTITY_TOL)?;
    validate_times(&json.times)?;
    let n = order(common, json.n, 2)?;
    match json.spec.build()? {
        MasterModel::Collisional(coll) => collisional_run(common, &coll, &rho0, &json.times, n),
        MasterModel::Generator(gen) => {
            let default_tol = match json.spec {
                MasterSpec::CaldeiraLeggett(_) => TRUNCATION_TOL,
                _ => IDENTITY_TOL,
            };
            let dt = common.dt.or(json.dt).unwrap_or(DEFAULT_DT);
            generator_run(&*gen, &rho0, &json.times, n, dt, tolerance(common, default_tol)?)
        }
    }
}

fn generator_run<G: Generator + ?Sized>(
    gen: &G,
    rho0: &ComplexMatrix,
    times: &[f64],
    n: usize,
    dt: f64,
    tol: f64,
) -> Result<Report, CliError> {
    let rhon = PairTensor::outer_product(&vec![rho0.clone(); n], Flavor::Quantum)?;
    let s = integrate_hierarchy(gen, rho0, &rhon, times, RkConfig { dt, estimate_error: true })?;
    let mut report = Report::new();
    report.csv("master.csv", &matrix_csv(&s.times, &s.rho1));
    let last = s.times.len() - 1;
    report.json_compact(&format!("master_order_{n}.json"), &Snapshot::exact(Some(s.times[last]), &s.tensor[last]))?;
    let trace_gap = s.rho1.iter().map(|r| (r.trace() - 1.0).norm()).fold(0.0, f64::max);
    report.check(CheckRecord::at_most("trace_preserved", "master", "unit trace", trace_gap, tol));
    let herm = s
        .rho1
        .iter()
        .map(hermiticity_defect)
        .chain(s.tensor.iter().map(PairTensor::hermiticity_defect))
        .fold(0.0, f64::max);
    report.check(CheckRecord::at_most("hermiticity_preserved", "master", "density tensor hermiticity", herm, tol));
    report.check(CheckRecord::at_most(
        "integration_error_estimate",
        "master",
        "RK4 step-halving error",
        s.error_estimate.unwrap_or(f64::INFINITY),
        INTEGRATION_TOL,
    ));
    if n >= 2 {
        report.check(CheckRecord::at_most(
            "companion_tracks_contraction",
            "master",
            "hierarchy descent along the flow",
            s.descent_drift()?,
            tol,
        ));
        let mut worst: f64 = 0.0;
        for rho in [&s.rho1[0], &s.rho1[last]] {
            for k in 2..=n {
                for from in 0..k {
                    worst = worst.max(descent_defect(gen, rho, k, from)?);
                }
            }
        }
        report.check(CheckRecord::at_most(
            "generator_descent",
            "master",
            "generator chain descent with ρ → ρ²",
            worst,
            tol,
        ));
    }
    Ok(report)
}

/// `{model, psi0, times, n?}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollisionalRunJson {
    pub model: CollisionalJson,
    pub psi0: Vec<[f64; 2]>,
    pub times: Vec<f64>,
    #[serde(default)]
    pub n: Option<usize>,
}

pub fn collisional(common: &Common) -> Result<Report, CliError> {
    let json: CollisionalRunJson = load(common)?;
    let coll = Collisional::from_json(&json.model)?;
    let rho0 = projector(&initial_state(&json.psi0)?);
    validate_times(&json.times)?;
    let n = order(common, json.n, 3)?;
    collisional_run(common, &coll, &rho0, &json.times, n)
}

fn collisional_run(common: &Common, coll: &Collisional, rho0: &ComplexMatrix, times: &[f64], n: usize) -> Result<Report, CliError> {
    if rho0.nrows() != coll.dim() {
        return Err(CliError::Usage(format!("initial state must live on the {}-point grid", coll.dim())));
    }
    let tol = tolerance(common, IDENTITY_TOL)?;
    let mut report = Report::new();
    report.csv("kernel.csv", &coll.kernel_csv());
    let initial: Vec<PairTensor> = (1..=n)
        .map(|k| PairTensor::outer_product(&vec![rho0.clone(); k], Flavor::Quantum))
        .collect::<Result<_, _>>()?;
    let first: Vec<ComplexMatrix> = times
        .iter()
        .map(|&t| coll.evolve(&initial[0], t)?.to_matrix())
        .collect::<Result<_, _>>()?;
    report.csv("collisional.csv", &matrix_csv(times, &first));
    let mut worst: f64 = 0.0;
    for &t in times {
        for (k, t0) in initial.iter().enumerate().map(|(i, x)| (i + 1, x)).skip(1) {
            let evolved = coll.evolve(t0, t)?;
            for from in 0..k {
                let to = (from + 1) % k;
                let lhs = evolved.contract_chain(from, to)?;
                let rhs = coll.evolve(&t0.contract_chain(from, to)?, t)?;
                worst = worst.max(lhs.max_abs_diff(&rhs));
            }
        }
    }
    report.check(CheckRecord::at_most(
        "evolution_commutes_with_descent",
        "master",
        "collisional hierarchy descent",
        worst,
        tol,
    ));
    let last = *times.last().expect("validated nonempty");
    report.json_compact(
        &format!("collisional_order_{n}.json"),
        &Snapshot::exact(Some(last), &coll.evolve(&initial[n - 1], last)?),
    )?;
    report.check(CheckRecord::at_most(
        "pair_swap_symmetry",
        "master",
        "second-order exponent swap symmetry",
        coll.exponent_tensor(2)?.full_symmetry_defect(),
        tol,
    ));
    let e3 = coll.exponent_tensor(3)?;
    let (fs, fa) = coll.third_order_split()?;
    let mut sum = fs.clone();
    sum.axpy(c(1.0, 0.0), &fa)?;
    let split = sum
        .max_abs_diff(&e3)
        .max(fs.full_symmetry_defect())
        .max(fa.antisymmetric_part().max_abs_diff(&fa));
    report.check(CheckRecord::at_most(
        "third_order_split",
        "master",
        "symmetric and antisymmetric third-order exponent",
        split,
        tol,
    ));
    Ok(report)
}
