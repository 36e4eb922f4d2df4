// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Subcommand implementations and the helpers they share.

mod classical;
mod quantum;
mod reduce;
mod trajectories;

use std::fs;

use noisetensor::ensemble::TensorEstimate;
use noisetensor::io::{vector_from_json, CheckRecord};
use noisetensor::matrix::norm_sqr;
use noisetensor::tensor::TensorJson;
use noisetensor::trajectory::SdeConfig;
use noisetensor::{PairTensor, StateVector};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;
use crate::report::Report;
use crate::{Command, Common};

/// Default tolerance of exact identity checks.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Monte-Carlo comparisons pass within this many standard errors.
pub const STAT_SIGMAS: f64 = 4.0;
/// Absolute gap below which a Monte-Carlo comparison counts as exact.
pub const STAT_FLOOR: f64 = 1e-12;
/// Largest accepted `|‖ψ‖² − 1|` of an initial state.
pub const NORM_TOL: f64 = 1e-10;

pub fn dispatch(command: &Command) -> Result<Report, CliError> {
    match command {
        Command::Ensemble(c) => classical::ensemble(c),
        Command::Spin(c) => classical::spin(c),
        Command::CheckDescent(c) => classical::check_descent(c),
        Command::Ito(c) => trajectories::ito(c),
        Command::Jump(c) => trajectories::jump(c),
        Command::Qtensor(c) => quantum::qtensor(c),
        Command::Master(c) => quantum::master(c),
        Command::Collisional(c) => quantum::collisional(c),
        Command::Reduce { common, variant } => reduce::reduce(common, *variant),
    }
}

/// Reads and deserializes the `--input` file, reporting the failing field
/// path together with the line and column.
pub fn load<T: DeserializeOwned>(common: &Common) -> Result<T, CliError> {
    let path = common
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage("this subcommand needs --input".into()))?;
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.clone(),
        source,
    })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Parse {
        path: path.clone(),
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn tolerance(common: &Common, default: f64) -> Result<f64, CliError> {
    match common.tolerance {
        Some(t) if !(t >= 0.0 && t.is_finite()) => Err(CliError::Usage(format!("--tolerance {t} must be nonnegative"))),
        Some(t) => Ok(t),
        None => Ok(default),
    }
}

pub fn order(common: &Common, config: Option<usize>, default: usize) -> Result<usize, CliError> {
    let n = common.n.or(config).unwrap_or(default);
    if n == 0 {
        return Err(CliError::Usage("the tensor order must be positive".into()));
    }
    Ok(n)
}

pub fn seed(common: &Common, config: Option<u64>) -> Result<u64, CliError> {
    common
        .seed
        .or(config)
        .ok_or_else(|| CliError::Usage("stochastic subcommands need a seed (--seed or the config's `seed`)".into()))
}

/// Normalized initial state; the config must already be normalized.
pub fn initial_state(psi: &[[f64; 2]]) -> Result<StateVector, CliError> {
    let v = vector_from_json(psi);
    let defect = (norm_sqr(v.as_slice()) - 1.0).abs();
    if !(defect <= NORM_TOL) {
        return Err(CliError::Usage(format!("initial state has |‖ψ‖² − 1| = {defect:e}")));
    }
    Ok(v)
}

/// Applies `--seed`, `--traj` and `--dt`. A new step keeps the final time
/// and the recording times as close as the step allows.
pub fn override_sde(cfg: &mut SdeConfig, common: &Common) -> Result<(), CliError> {
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(t) = common.traj {
        cfg.n_traj = t;
    }
    if let Some(dt) = common.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CliError::Usage(format!("--dt {dt} must be positive")));
        }
        let ratio = cfg.dt / dt;
        cfg.steps = (cfg.steps as f64 * ratio).round() as usize;
        cfg.record_every = ((cfg.record_every as f64 * ratio).round() as usize).max(1);
        cfg.dt = dt;
    }
    cfg.validate()?;
    Ok(())
}

/// Tensor with optional entrywise standard errors, as written to disk.
#[derive(Debug, Serialize)]
pub struct Snapshot {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    pub tensor: TensorJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr_re: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr_im: Option<Vec<f64>>,
}

impl Snapshot {
    pub fn exact(time: Option<f64>, t: &PairTensor) -> Self {
        Self {
            time,
            tensor: t.to_json(),
            stderr_re: None,
            stderr_im: None,
        }
    }

    pub fn estimate(time: Option<f64>, e: &TensorEstimate) -> Self {
        Self {
            time,
            tensor: e.mean.to_json(),
            stderr_re: Some(e.stderr_re.clone()),
            stderr_im: Some(e.stderr_im.clone()),
        }
    }
}

/// Unit trace, Hermiticity and permutation symmetry of classical tensors
/// `tensors[k − 1]` of order `k`, and every trace and chain contraction
/// of order `k` against order `k − 1`.
pub fn classical_checks(report: &mut Report, module: &str, label: &str, tensors: &[PairTensor], tol: f64) -> Result<(), CliError> {
    for (k, t) in tensors.iter().enumerate().map(|(i, t)| (i + 1, t)) {
        report.check(CheckRecord::at_most(
            &format!("{label}_hermiticity_order_{k}"),
            module,
            "density tensor hermiticity",
            t.hermiticity_defect(),
            tol,
        ));
        report.check(CheckRecord::at_most(
            &format!("{label}_permutation_symmetry_order_{k}"),
            module,
            "pair permutation symmetry",
            t.full_symmetry_defect(),
            tol,
        ));
        if k == 1 {
            let trace = t.to_matrix()?.trace();
            report.check(CheckRecord::at_most(
                &format!("{label}_unit_trace"),
                module,
                "unit trace",
                (trace - 1.0).norm(),
                tol,
            ));
            continue;
        }
        let lower = &tensors[k - 2];
        let mut trace_gap: f64 = 0.0;
        let mut chain_gap: f64 = 0.0;
        for a in 0..k {
            trace_gap = trace_gap.max(t.contract_trace(a)?.max_abs_diff(lower));
            for b in 0..k {
                if a != b {
                    chain_gap = chain_gap.max(t.contract_chain(a, b)?.max_abs_diff(lower));
                }
            }
        }
        report.check(CheckRecord::at_most(
            &format!("{label}_trace_descent_order_{k}"),
            module,
            "trace descent",
            trace_gap,
            tol,
        ));
        report.check(CheckRecord::at_most(
            &format!("{label}_chain_descent_order_{k}"),
            module,
            "idempotent chain descent",
            chain_gap,
            tol,
        ));
    }
    Ok(())
}

/// Adjacent-chain descent of quantum-flavor tensors `tensors[k − 1]`,
/// including the cyclic pair `(k − 1, 0)`.
pub fn quantum_chain_checks(report: &mut Report, module: &str, label: &str, tensors: &[PairTensor], tol: f64) -> Result<(), CliError> {
    for (k, t) in tensors.iter().enumerate().map(|(i, t)| (i + 1, t)).skip(1) {
        let lower = &tensors[k - 2];
        let mut gap: f64 = 0.0;
        for from in 0..k {
            gap = gap.max(t.contract_chain(from, (from + 1) % k)?.max_abs_diff(lower));
        }
        report.check(CheckRecord::at_most(
            &format!("{label}_chain_descent_order_{k}"),
            module,
            "adjacent chain descent",
            gap,
            tol,
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    fn common(args: &[&str]) -> Common {
        let mut argv = vec!["noisetensor", "ito"];
        argv.extend(args);
        match crate::Cli::try_parse_from(argv).unwrap().command {
            Command::Ito(c) => c,
            _ => unreachable!(),
        }
    }

    #[test]
    fn step_override_keeps_time_grid() {
        let mut cfg = SdeConfig::new(1e-2, 100, 400, 1).record_every(10);
        override_sde(&mut cfg, &common(&["--dt", "2.5e-3", "--seed", "9", "--traj", "800"])).unwrap();
        assert_eq!((cfg.steps, cfg.record_every, cfg.seed, cfg.n_traj), (400, 40, 9, 800));
        assert!((cfg.times().last().unwrap() - 1.0).abs() < 1e-12);
        assert!(override_sde(&mut cfg, &common(&["--dt=-1"])).is_err());
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(seed(&common(&[]), None).is_err());
        assert_eq!(seed(&common(&[]), Some(4)).unwrap(), 4);
        assert_eq!(seed(&common(&["--seed", "5"]), Some(4)).unwrap(), 5);
    }

    #[test]
    fn initial_state_must_be_normalized() {
        assert!(initial_state(&[[0.6, 0.0], [0.0, 0.8]]).is_ok());
        assert!(initial_state(&[[1.0, 0.0], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn overrides_validate() {
        assert!(tolerance(&common(&["--tolerance=-1"]), 1.0).is_err());
        assert_eq!(tolerance(&common(&[]), 0.5).unwrap(), 0.5);
        assert!(order(&common(&["--n", "0"]), None, 2).is_err());
        assert_eq!(order(&common(&[]), Some(3), 2).unwrap(), 3);
    }

    #[test]
    fn descent_checks_flag_a_broken_tensor() {
        use noisetensor::ensemble::WeightedEnsemble;
        use noisetensor::matrix::basis_state;
        let ens = WeightedEnsemble::uniform(2, vec![basis_state(2, 0), basis_state(2, 1)]).unwrap();
        let mut tensors = vec![ens.density_tensor(1).unwrap(), ens.density_tensor(2).unwrap()];
        let mut report = Report::new();
        classical_checks(&mut report, "ensemble", "ok", &tensors, IDENTITY_TOL).unwrap();
        assert!(report.passed());
        tensors[1].scale(noisetensor::C64::new(1.01, 0.0));
        classical_checks(&mut report, "ensemble", "bad", &tensors, IDENTITY_TOL).unwrap();
        let failed: Vec<&str> = report.failures().map(|c| c.check.as_str()).collect();
        assert_eq!(failed, ["bad_trace_descent_order_2", "bad_chain_descent_order_2"]);
    }
}
