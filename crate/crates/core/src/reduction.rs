// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Reducing and non-reducing unravelings of the same double-commutator
//! Lindblad equation `dρ = −½[A, [A, ρ]] dt`.
//!
//! With a real Wiener increment the reducing equation
//! `dψ = −½(A − ⟨A⟩)² ψ dt + (A − ⟨A⟩) ψ dW` is the Itô unraveling with
//! `c = A`, and the non-reducing `dψ = −½A² ψ dt + iA ψ dW` the one with
//! `c = iA`. Both reproduce the same `E[ρ]`, but the expected variance of `A`
//! decays at rate `E[(Tr [ρ, [ρ, A]] A)²]` only in the reducing case.

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{matrix_from_json, matrix_to_json, vector_from_json, vector_to_json, MatrixJson};
use crate::ito::ItoUnraveling;
use crate::lindblad::LindbladModel;
use crate::matrix::{commutator, matvec_into, norm_sqr, require_hermitian, ComplexMatrix, StateVector, C64, I};
use crate::stats::{from_batch_means, Estimate};
use crate::trajectory::{run_batches, run_ensemble, BatchSeries, SdeConfig, TensorSeries, RATE_DT_LIMIT};

/// Trajectories with a final variance below this count as reduced.
pub const DEFAULT_THRESHOLD: f64 = 1e-4;

/// Smallest fraction of reduced trajectories accepted by
/// [`outcome_statistics`].
pub const MIN_CONVERGED_FRACTION: f64 = 0.5;

/// Eigenvalues closer than this are one outcome.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Absolute slack for quantities conserved exactly up to rounding.
pub const ROUND_OFF: f64 = 1e-10;

const OBS_VARIANCE: usize = 0;
const OBS_MEAN: usize = 1;
const OBS_RATE: usize = 2;
const OBS_NORM: usize = 3;
const N_OBS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `c = A`.
    Reducing,
    /// `c = iA`.
    Nonreducing,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Reducing => "reducing",
            Variant::Nonreducing => "nonreducing",
        }
    }

    fn stream(self) -> &'static str {
        match self {
            Variant::Reducing => "reduce/reducing",
            Variant::Nonreducing => "reduce/nonreducing",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reducing" => Ok(Variant::Reducing),
            "nonreducing" => Ok(Variant::Nonreducing),
            other => Err(Error::InvalidInput(format!("unknown variant `{other}`"))),
        }
    }
}

/// Eigenvalue outcomes of `A` with the eigenspace projectors.
#[derive(Debug, Clone)]
pub struct Outcomes {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors of each outcome, as columns.
    bases: Vec<ComplexMatrix>,
}

impl Outcomes {
    pub fn new(a: &ComplexMatrix) -> Self {
        let eig = a.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
        let mut eigenvalues: Vec<f64> = Vec::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for k in order {
            let lambda = eig.eigenvalues[k];
            match eigenvalues.last() {
                Some(&last) if (lambda - last).abs() <= DEGENERACY_TOL => groups.last_mut().expect("nonempty").push(k),
                _ => {
                    eigenvalues.push(lambda);
                    groups.push(vec![k]);
                }
            }
        }
        let bases = groups
            .iter()
            .map(|g| DMatrix::from_columns(&g.iter().map(|&k| eig.eigenvectors.column(k)).collect::<Vec<_>>()))
            .collect();
        Self { eigenvalues, bases }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `‖P_a ψ‖²` for every outcome `a`.
    pub fn weights(&self, psi: &[C64]) -> Vec<f64> {
        self.bases
            .iter()
            .map(|b| {
                b.column_iter()
                    .map(|v| v.iter().zip(psi).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr())
                    .sum()
            })
            .collect()
    }
}

/// `Tr([ρ, [ρ, A]] A)` for `ρ = |ψ⟩⟨ψ|`, evaluated with explicit matrices.
pub fn reduction_pressure(psi: &StateVector, a: &ComplexMatrix) -> f64 {
    let rho = psi * psi.adjoint();
    let inner = commutator(&rho, a);
    (commutator(&rho, &inner) * a).trace().re
}

#[derive(Debug, Clone)]
pub struct ReductionExperiment {
    a: ComplexMatrix,
    variant: Variant,
    psi0: StateVector,
    sde: SdeConfig,
}

impl ReductionExperiment {
    pub fn new(a: ComplexMatrix, variant: Variant, psi0: StateVector, sde: SdeConfig) -> Result<Self> {
        require_hermitian(&a, 1e-10)?;
        if psi0.len() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {} for a {}×{} observable",
                psi0.len(),
                a.nrows(),
                a.ncols()
            )));
        }
        let norm = psi0.norm_squared();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("initial state has squared norm {norm}")));
        }
        sde.validate()?;
        Ok(Self { a, variant, psi0, sde })
    }

    pub fn observable(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.psi0
    }

    pub fn config(&self) -> &SdeConfig {
        &self.sde
    }

    /// The same experiment with the other variant or another configuration.
    pub fn with_variant(&self, variant: Variant) -> Self {
        Self { variant, ..self.clone() }
    }

    pub fn with_config(&self, sde: SdeConfig) -> Result<Self> {
        sde.validate()?;
        Ok(Self { sde, ..self.clone() })
    }

    pub fn unraveling(&self) -> Result<ItoUnraveling> {
        unraveling(&self.a, self.variant)
    }

    pub fn from_json(json: &ReductionJson) -> Result<Self> {
        Self::new(matrix_from_json(&json.a)?, json.variant, vector_from_json(&json.psi0), json.sde.clone())
    }

    pub fn to_json(&self) -> ReductionJson {
        ReductionJson {
            a: matrix_to_json(&self.a),
            variant: self.variant,
            psi0: vector_to_json(&self.psi0),
            sde: self.sde.clone(),
        }
    }
}

fn unraveling(a: &ComplexMatrix, variant: Variant) -> Result<ItoUnraveling> {
    let c = match variant {
        Variant::Reducing => a.clone(),
        Variant::Nonreducing => a * I,
    };
    let d = a.nrows();
    ItoUnraveling::new(LindbladModel::with_real_noise(ComplexMatrix::zeros(d, d), vec![c])?)
}

/// Serialized experiment `{A, variant, psi0, sde}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionJson {
    #[serde(rename = "A")]
    pub a: MatrixJson,
    pub variant: Variant,
    pub psi0: Vec<[f64; 2]>,
    pub sde: SdeConfig,
}

/// Recorded batch means of `V`, `⟨A⟩`, `(Tr [ρ, [ρ, A]] A)²` and the norm
/// defect `|‖ψ‖² − 1|`, plus the final values and outcome weights of every
/// trajectory.
#[derive(Debug, Clone)]
pub struct ReductionRun {
    pub variant: Variant,
    pub outcomes: Outcomes,
    /// Outcome weights of the initial state.
    pub initial_weights: Vec<f64>,
    pub series: BatchSeries,
}

impl ReductionRun {
    pub fn times(&self) -> &[f64] {
        &self.series.times
    }

    /// `E[V](t)`.
    pub fn variance(&self) -> Vec<Estimate> {
        self.series.series(OBS_VARIANCE)
    }

    /// `E[⟨A⟩](t)`.
    pub fn mean(&self) -> Vec<Estimate> {
        self.series.series(OBS_MEAN)
    }

    /// `E[(Tr [ρ, [ρ, A]] A)²](t)`.
    pub fn pressure_squared(&self) -> Vec<Estimate> {
        self.series.series(OBS_RATE)
    }

    /// Largest batch-mean norm defect over the run.
    pub fn max_norm_defect(&self) -> f64 {
        self.series
            .batch_means
            .iter()
            .flat_map(|b| b.iter().skip(OBS_NORM).step_by(self.series.n_obs))
            .fold(0.0, |m: f64, x| m.max(*x))
    }

    /// Largest deviation of `E[V](t)` from `value` in standard errors, with
    /// [`ROUND_OFF`] absolute slack.
    pub fn max_variance_deviation(&self, value: f64) -> f64 {
        self.variance()
            .iter()
            .map(|e| excess_z((e.mean - value).abs(), e.stderr))
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `E[⟨A⟩](t)` from `value` in standard errors, with
    /// [`ROUND_OFF`] absolute slack.
    pub fn max_mean_deviation(&self, value: f64) -> f64 {
        self.mean()
            .iter()
            .map(|e| excess_z((e.mean - value).abs(), e.stderr))
            .fold(0.0, f64::max)
    }

    /// Largest increase of `E[V]` between consecutive recorded times, in
    /// standard errors of the batch-wise difference; `0` for a nonincreasing
    /// series.
    pub fn max_variance_increase(&self) -> f64 {
        (1..self.series.times.len())
            .map(|k| {
                let before = self.batch_values(k - 1, OBS_VARIANCE);
                let after = self.batch_values(k, OBS_VARIANCE);
                let diff: Vec<f64> = after.iter().zip(&before).map(|(a, b)| a - b).collect();
                let e = from_batch_means(&diff);
                excess_z(e.mean.max(0.0), e.stderr)
            })
            .fold(0.0, f64::max)
    }

    /// Final variance of every trajectory.
    pub fn variance_samples(&self) -> Vec<f64> {
        self.series.finals.iter().map(|f| f[OBS_VARIANCE]).collect()
    }

    fn batch_values(&self, time: usize, obs: usize) -> Vec<f64> {
        self.series.batch_means.iter().map(|b| b[time * self.series.n_obs + obs]).collect()
    }

    /// Columns `t, E[V], stderr, E[⟨A⟩], stderr`.
    pub fn csv(&self) -> crate::io::CsvTable {
        let mut table = crate::io::CsvTable::new(
            ["t", "mean_variance", "stderr_variance", "mean_expectation", "stderr_expectation"]
                .map(String::from)
                .to_vec(),
        );
        for (k, t) in self.series.times.iter().enumerate() {
            let v = self.series.estimate(k, OBS_VARIANCE);
            let m = self.series.estimate(k, OBS_MEAN);
            table.push(vec![*t, v.mean, v.stderr, m.mean, m.stderr]);
        }
        table
    }
}

/// Integrates the experiment's unraveling and records the variance
/// statistics.
pub fn run_reduction(exp: &ReductionExperiment) -> Result<ReductionRun> {
    let unr = exp.unraveling()?;
    let scale = crate::matrix::operator_norm(&exp.a).powi(2);
    if scale * exp.sde.dt > RATE_DT_LIMIT {
        warn!("dt = {} is large for ‖A‖² = {scale}", exp.sde.dt);
    }
    let outcomes = Outcomes::new(&exp.a);
    let initial_weights = outcomes.weights(exp.psi0.as_slice());
    let d = exp.a.nrows();
    let a = &exp.a;
    let a2 = a * a;
    let n_out = outcomes.len();
    let series = run_batches(&unr, &exp.psi0, &exp.sde, exp.variant.stream(), N_OBS + n_out, true, |psi, out| {
        let mut ap = vec![C64::new(0.0, 0.0); d];
        matvec_into(a, psi, &mut ap);
        let norm = norm_sqr(psi);
        let mean: f64 = psi.iter().zip(&ap).map(|(x, y)| (x.conj() * y).re).sum::<f64>() / norm;
        matvec_into(&a2, psi, &mut ap);
        let second: f64 = psi.iter().zip(&ap).map(|(x, y)| (x.conj() * y).re).sum::<f64>() / norm;
        let state = StateVector::from_column_slice(psi).unscale(norm.sqrt());
        let q = reduction_pressure(&state, a);
        out[OBS_VARIANCE] = (second - mean * mean).max(0.0);
        out[OBS_MEAN] = mean;
        out[OBS_RATE] = q * q;
        out[OBS_NORM] = (norm - 1.0).abs();
        for (o, w) in out[N_OBS..].iter_mut().zip(outcomes.weights(state.as_slice())) {
            *o = w;
        }
    })?;
    Ok(ReductionRun {
        variant: exp.variant,
        outcomes,
        initial_weights,
        series,
    })
}

fn excess_z(gap: f64, stderr: f64) -> f64 {
    let excess = (gap - ROUND_OFF).max(0.0);
    if excess == 0.0 {
        0.0
    } else {
        excess / stderr
    }
}

/// Measured and predicted `dE[V]/dt` at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCheck {
    pub time: f64,
    pub measured: Estimate,
    pub predicted: Estimate,
    /// Batch-wise `measured − predicted`.
    pub difference: Estimate,
}

impl RateCheck {
    /// Deviation in standard errors, with [`ROUND_OFF`] absolute slack.
    pub fn z_score(&self) -> f64 {
        excess_z(self.difference.mean.abs(), self.difference.stderr)
    }

    pub fn passes(&self, sigmas: f64) -> bool {
        self.z_score() <= sigmas
    }
}

/// Finite-difference `dE[V]/dt` at the recorded time nearest `t` against
/// `−E[(Tr [ρ, [ρ, A]] A)²]` (reducing) or `0` (non-reducing). Interior
/// points use central differences and the endpoints second-order one-sided
/// ones; the error bars come from the batch spread of the difference.
pub fn variance_rate_check(run: &ReductionRun, t: f64) -> Result<RateCheck> {
    let times = &run.series.times;
    if times.len() < 3 {
        return Err(Error::InsufficientStatistics(format!(
            "{} recorded times; a finite difference needs at least 3",
            times.len()
        )));
    }
    let last = *times.last().expect("nonempty");
    if !(t >= times[0] && t <= last) {
        return Err(Error::InvalidInput(format!("t = {t} outside the recorded range [{}, {last}]", times[0])));
    }
    let k = run.series.time_index(t);
    let h = times[1] - times[0];
    let v = |i: usize| run.batch_values(i, OBS_VARIANCE);
    let stencil: Vec<(usize, f64)> = if k == 0 {
        vec![(0, -1.5), (1, 2.0), (2, -0.5)]
    } else if k + 1 == times.len() {
        vec![(k - 2, 0.5), (k - 1, -2.0), (k, 1.5)]
    } else {
        vec![(k - 1, -0.5), (k + 1, 0.5)]
    };
    let batches = run.series.batch_means.len();
    let mut measured = vec![0.0; batches];
    for (i, w) in stencil {
        for (m, x) in measured.iter_mut().zip(v(i)) {
            *m += w * x / h;
        }
    }
    let predicted: Vec<f64> = match run.variant {
        Variant::Reducing => run.batch_values(k, OBS_RATE).iter().map(|q| -q).collect(),
        Variant::Nonreducing => vec![0.0; batches],
    };
    let difference: Vec<f64> = measured.iter().zip(&predicted).map(|(m, p)| m - p).collect();
    Ok(RateCheck {
        time: times[k],
        measured: from_batch_means(&measured),
        predicted: from_batch_means(&predicted),
        difference: from_batch_means(&difference),
    })
}

/// Frequencies of the eigenvalue outcomes among reduced trajectories.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeTable {
    pub threshold: f64,
    pub total: usize,
    pub converged: usize,
    pub eigenvalues: Vec<f64>,
    pub counts: Vec<usize>,
    /// Observed frequency with its binomial standard error.
    pub frequencies: Vec<Estimate>,
    /// `|⟨a|ψ₀⟩|²` summed over each eigenspace.
    pub expected: Vec<f64>,
}

impl OutcomeTable {
    /// Largest deviation of an observed frequency from its expected value,
    /// in standard errors.
    pub fn max_z_score(&self) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.expected)
            .map(|(f, e)| f.z_score(*e))
            .fold(0.0, f64::max)
    }
}

/// Tallies the eigenvalue outcome (largest final weight) of every
/// trajectory whose final variance is below `threshold`.
pub fn outcome_statistics(run: &ReductionRun, threshold: f64) -> Result<OutcomeTable> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidInput(format!("threshold {threshold} must be positive")));
    }
    let total = run.series.finals.len();
    let mut counts = vec![0usize; run.outcomes.len()];
    let mut converged = 0;
    for f in &run.series.finals {
        if f[OBS_VARIANCE] >= threshold {
            continue;
        }
        let weights = &f[N_OBS..];
        let best = (0..weights.len()).max_by(|&x, &y| weights[x].total_cmp(&weights[y])).expect("nonempty spectrum");
        counts[best] += 1;
        converged += 1;
    }
    if converged == 0 || (converged as f64) < MIN_CONVERGED_FRACTION * total as f64 {
        return Err(Error::InsufficientStatistics(format!(
            "{converged} of {total} trajectories reduced below V = {threshold}"
        )));
    }
    let n = converged as f64;
    let frequencies = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            Estimate {
                mean: p,
                stderr: (p * (1.0 - p) / n).sqrt(),
            }
        })
        .collect();
    Ok(OutcomeTable {
        threshold,
        total,
        converged,
        eigenvalues: run.outcomes.eigenvalues.clone(),
        counts,
        frequencies,
        expected: run.initial_weights.clone(),
    })
}

/// Density tensor estimates of orders `1..=max_order` under both variants,
/// from independent random streams: `(reducing, nonreducing)`.
pub fn unraveling_contrast(
    a: &ComplexMatrix,
    psi0: &StateVector,
    cfg: &SdeConfig,
    max_order: usize,
) -> Result<(TensorSeries, TensorSeries)> {
    let exp = ReductionExperiment::new(a.clone(), Variant::Reducing, psi0.clone(), cfg.clone())?;
    let run = |v: Variant| run_ensemble(&unraveling(&exp.a, v)?, psi0, cfg, v.stream(), max_order);
    Ok((run(Variant::Reducing)?, run(Variant::Nonreducing)?))
}
