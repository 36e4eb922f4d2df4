// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Batch front end for the `noisetensor` toolkit: reads a JSON experiment
//! config, runs one subcommand, and writes CSV series, tensor snapshots and
//! a `checks.json` report into the output directory.

pub mod commands;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use noisetensor::reduction::Variant;

pub use error::CliError;
pub use report::Report;

/// Exit status when every check passes.
pub const EXIT_OK: i32 = 0;
/// Exit status when at least one check fails.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit status for unreadable or invalid configs and arguments.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status when a tensor would exceed the memory budget.
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "noisetensor", version, about = "Density tensor experiments with reproducible artifacts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON experiment config.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Master seed; overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Highest tensor order.
    #[arg(long)]
    pub n: Option<usize>,
    /// Time step; overrides the config's step at fixed final time.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of trajectories or samples.
    #[arg(long)]
    pub traj: Option<usize>,
    /// Tolerance for exact identity checks.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Density tensors of a weighted pure-state ensemble.
    Ensemble(Common),
    /// Isotropic spin-1/2 ensemble sampled against its closed form.
    Spin(Common),
    /// Diffusive unraveling of a Lindblad model.
    Ito(Common),
    /// Jump unraveling of a Lindblad model.
    Jump(Common),
    /// Environment-trace tensors of a bipartite state.
    Qtensor(Common),
    /// Hierarchy integration for a weak-coupling master equation.
    Master(Common),
    /// Closed-form collisional decoherence hierarchy.
    Collisional(Common),
    /// Observable-variance reduction under a diffusive unraveling.
    Reduce {
        #[command(flatten)]
        common: Common,
        /// Overrides the config's variant.
        #[arg(long)]
        variant: Option<Variant>,
    },
    /// Descent contractions of an ensemble, spin or bipartite config.
    CheckDescent(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ensemble(_) => "ensemble",
            Command::Spin(_) => "spin",
            Command::Ito(_) => "ito",
            Command::Jump(_) => "jump",
            Command::Qtensor(_) => "qtensor",
            Command::Master(_) => "master",
            Command::Collisional(_) => "collisional",
            Command::Reduce { .. } => "reduce",
            Command::CheckDescent(_) => "check-descent",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Ensemble(c)
            | Command::Spin(c)
            | Command::Ito(c)
            | Command::Jump(c)
            | Command::Qtensor(c)
            | Command::Master(c)
            | Command::Collisional(c)
            | Command::CheckDescent(c) => c,
            Command::Reduce { common, .. } => common,
        }
    }
}

/// Runs the command and writes its artifacts. The report is returned even
/// when checks fail; errors mean nothing meaningful was computed.
pub fn run(cli: &Cli) -> Result<Report, CliError> {
    let common = cli.command.common();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start the thread pool: {e}")))?;
    let report = pool.install(|| commands::dispatch(&cli.command))?;
    report.write(&common.out)?;
    Ok(report)
}

/// Parses `args`, runs, logs the outcome and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(report) => {
            let failed: Vec<&str> = report.failures().map(|c| c.check.as_str()).collect();
            if failed.is_empty() {
                log::info!("{}: {} checks passed", cli.command.name(), report.checks().len());
                EXIT_OK
            } else {
                log::error!("{}: failing checks: {}", cli.command.name(), failed.join(", "));
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            log::error!("{}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_subcommand() {
        for name in ["ensemble", "spin", "ito", "jump", "qtensor", "master", "collisional", "reduce", "check-descent"] {
            let cli = Cli::try_parse_from(["noisetensor", name, "--n", "2"]).unwrap();
            assert_eq!(cli.command.name(), name);
            assert_eq!(cli.command.common().n, Some(2));
        }
        let cli = Cli::try_parse_from(["noisetensor", "reduce", "--variant", "nonreducing"]).unwrap();
        assert!(matches!(cli.command, Command::Reduce { variant: Some(Variant::Nonreducing), .. }));
        assert!(Cli::try_parse_from(["noisetensor", "reduce", "--variant", "sideways"]).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with_args(["noisetensor", "bogus"]), EXIT_CONFIG);
        let budget = CliError::Core(noisetensor::Error::BudgetExceeded {
            entries: 1,
            budget_bytes: 0,
        });
        assert_eq!(budget.exit_code(), EXIT_BUDGET);
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_CONFIG);
    }
}
