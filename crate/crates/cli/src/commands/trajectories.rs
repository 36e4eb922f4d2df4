// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! `ito` and `jump`: trajectory ensembles of a Lindblad model.

use noisetensor::io::{CheckRecord, CsvTable};
use noisetensor::ito::ItoUnraveling;
use noisetensor::jump::JumpModel;
use noisetensor::lindblad::{LindbladModel, ModelJson};
use noisetensor::matrix::projector;
use noisetensor::trajectory::{SdeConfig, TensorSeries};
use noisetensor::{Flavor, PairTensor, StateVector};
use serde::{Deserialize, Serialize};

use super::{classical_checks, initial_state, load, order, override_sde, tolerance, Snapshot, IDENTITY_TOL, STAT_FLOOR, STAT_SIGMAS};
use crate::error::CliError;
use crate::report::Report;
use crate::Common;

/// Longest RK4 step of the deterministic reference solution.
const REFERENCE_DT: f64 = 1e-3;

/// `{model, psi0, sde, max_order}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryJson {
    pub model: ModelJson,
    pub psi0: Vec<[f64; 2]>,
    pub sde: SdeConfig,
    #[serde(default)]
    pub max_order: Option<usize>,
}

struct Setup {
    model: LindbladModel,
    psi0: StateVector,
    cfg: SdeConfig,
    n: usize,
    tol: f64,
}

fn setup(common: &Common, json: &TrajectoryJson) -> Result<Setup, CliError> {
    let mut cfg = json.sde.clone();
    override_sde(&mut cfg, common)?;
    Ok(Setup {
        model: LindbladModel::from_json(&json.model)?,
        psi0: initial_state(&json.psi0)?,
        cfg,
        n: order(common, json.max_order, 2)?,
        tol: tolerance(common, IDENTITY_TOL)?,
    })
}

/// Writes the first-order series against the master-equation solution and
/// the final-time snapshots, then checks agreement and exact descent.
fn finish(name: &str, s: &Setup, series: &TensorSeries) -> Result<Report, CliError> {
    let d = s.model.dim();
    let reference = s
        .model
        .evolve(&projector(&s.psi0), &series.times, REFERENCE_DT.min(s.cfg.dt))?;
    let mut header = vec!["t".to_string()];
    for i in 0..d {
        for j in 0..d {
            for col in ["re", "im", "stderr_re", "stderr_im", "lindblad_re", "lindblad_im"] {
                header.push(format!("rho_{i}_{j}_{col}"));
            }
        }
    }
    let mut table = CsvTable::new(header);
    let mut worst_z: f64 = 0.0;
    for (k, t) in series.times.iter().enumerate() {
        let est = series.at(1, k);
        let exact = PairTensor::from_matrix(&reference[k], Flavor::Classical)?;
        worst_z = worst_z.max(est.max_z_score(&exact, STAT_FLOOR));
        let mut row = vec![*t];
        for (flat, m) in est.mean.entries().iter().enumerate() {
            let r = exact.entries()[flat];
            row.extend([m.re, m.im, est.stderr_re[flat], est.stderr_im[flat], r.re, r.im]);
        }
        table.push(row);
    }
    let mut report = Report::new();
    report.csv(&format!("{name}.csv"), &table);
    let last = series.times.len() - 1;
    let finals: Vec<PairTensor> = (1..=s.n).map(|k| series.at(k, last).mean.clone()).collect();
    for k in 1..=s.n {
        report.json_compact(
            &format!("{name}_order_{k}.json"),
            &Snapshot::estimate(Some(series.times[last]), series.at(k, last)),
        )?;
    }
    report.check(CheckRecord::at_most(
        "first_order_matches_master_equation",
        name,
        "trajectory average solves the master equation",
        worst_z,
        STAT_SIGMAS,
    ));
    classical_checks(&mut report, name, "final", &finals, s.tol)?;
    Ok(report)
}

pub fn ito(common: &Common) -> Result<Report, CliError> {
    let json: TrajectoryJson = load(common)?;
    let s = setup(common, &json)?;
    let series = ItoUnraveling::new(s.model.clone())?.run_ensemble(&s.psi0, &s.cfg, s.n)?;
    finish("ito", &s, &series)
}

pub fn jump(common: &Common) -> Result<Report, CliError> {
    let json: TrajectoryJson = load(common)?;
    let s = setup(common, &json)?;
    let series = JumpModel::from_json(&json.model)?.run_ensemble(&s.psi0, &s.cfg, s.n)?;
    finish("jump", &s, &series)
}
