// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! `reduce`: variance of an observable under reducing and nonreducing
//! diffusive unravelings.

use noisetensor::io::CheckRecord;
use noisetensor::matrix::expectation;
use noisetensor::reduction::{
    outcome_statistics, run_reduction, variance_rate_check, ReductionExperiment, ReductionJson, Variant,
    DEFAULT_THRESHOLD,
};
use noisetensor::Error;

use super::{load, override_sde, tolerance, IDENTITY_TOL, STAT_SIGMAS};
use crate::error::CliError;
use crate::report::Report;
use crate::Common;

/// Flatness and monotonicity of `E[V]` are judged at this many standard
/// errors.
const TREND_SIGMAS: f64 = 3.0;

pub fn reduce(common: &Common, variant: Option<Variant>) -> Result<Report, CliError> {
    let json: ReductionJson = load(common)?;
    let mut exp = ReductionExperiment::from_json(&json)?;
    if let Some(v) = variant {
        exp = exp.with_variant(v);
    }
    let mut cfg = exp.config().clone();
    override_sde(&mut cfg, common)?;
    let exp = exp.with_config(cfg)?;
    let tol = tolerance(common, IDENTITY_TOL)?;
    let run = run_reduction(&exp)?;

    let a = exp.observable();
    let psi0 = exp.initial_state();
    let mean0 = expectation(a, psi0).re;
    let var0 = expectation(&(a * a), psi0).re - mean0 * mean0;
    let module = "reduction";

    let mut report = Report::new();
    report.csv("reduce.csv", &run.csv());
    report.check(CheckRecord::at_most("norm_preserved", module, "unit norm", run.max_norm_defect(), tol));
    report.check(CheckRecord::at_most(
        "expectation_martingale",
        module,
        "conserved mean of the observable",
        run.max_mean_deviation(mean0),
        STAT_SIGMAS,
    ));
    match exp.variant() {
        Variant::Nonreducing => report.check(CheckRecord::at_most(
            "variance_flat",
            module,
            "variance conserved without reduction",
            run.max_variance_deviation(var0),
            TREND_SIGMAS,
        )),
        Variant::Reducing => {
            report.check(CheckRecord::at_most(
                "variance_nonincreasing",
                module,
                "variance is a supermartingale",
                run.max_variance_increase(),
                TREND_SIGMAS,
            ));
            let end = *run.variance().last().expect("at least the initial time is recorded");
            let drop = if end.stderr > 0.0 { (var0 - end.mean) / end.stderr } else if end.mean < var0 { f64::INFINITY } else { 0.0 };
            report.check(CheckRecord::at_least(
                "variance_decreases",
                module,
                "variance decreases under reduction",
                drop,
                STAT_SIGMAS,
            ));
        }
    }
    let times = run.times();
    if times.len() >= 3 {
        let last = *times.last().expect("nonempty");
        for (label, t) in [("start", times[0]), ("middle", 0.5 * (times[0] + last)), ("end", last)] {
            let rc = variance_rate_check(&run, t)?;
            report.check(CheckRecord::at_most(
                &format!("variance_rate_{label}"),
                module,
                "variance rate equals minus the mean squared reduction pressure",
                rc.z_score(),
                STAT_SIGMAS,
            ));
        }
    } else {
        log::info!("{} recorded times: rate checks need at least 3", times.len());
    }
    if exp.variant() == Variant::Reducing {
        match outcome_statistics(&run, DEFAULT_THRESHOLD) {
            Ok(table) => {
                report.check(CheckRecord::at_most(
                    "outcome_frequencies",
                    module,
                    "outcome frequencies equal initial weights",
                    table.max_z_score(),
                    STAT_SIGMAS,
                ));
                report.json("outcomes.json", &table)?;
            }
            Err(Error::InsufficientStatistics(msg)) => log::info!("outcome statistics skipped: {msg}"),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(report)
}
