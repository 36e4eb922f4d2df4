// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Parallel pure-state trajectory driver with batch-means statistics.
//!
//! Trajectory `k` draws from stream `k` of the family named by the caller,
//! so results depend only on the seed, never on how batches are scheduled
//! across threads. Batches are contiguous ranges of trajectory ids and are
//! merged in id order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::TensorEstimate;
use crate::error::{Error, Result};
use crate::matrix::{norm_sqr, StateVector, C64, ZERO};
use crate::rng::{stream, StreamRng};
use crate::stats::{batch_ranges, check_batches, from_batch_means, Estimate};
use crate::tensor::{checked_len, extend_outer, Flavor, PairTensor};

/// Batch means of the recorded observables and the final-time observables.
type BatchSums = (Vec<f64>, Vec<Vec<f64>>);

/// Step sizes with `Σ rates · dt` above this draw a warning.
pub const RATE_DT_LIMIT: f64 = 0.1;

/// One stochastic update rule for a pure state.
pub trait Unraveling: Sync {
    type Workspace: Send;

    fn dim(&self) -> usize;

    fn workspace(&self) -> Self::Workspace;

    /// Advances `psi` by `dt`, drawing randomness from `rng`. With
    /// `renormalize` the state is rescaled to unit norm afterwards.
    fn step(
        &self,
        psi: &mut [C64],
        dt: f64,
        renormalize: bool,
        rng: &mut StreamRng,
        ws: &mut Self::Workspace,
    ) -> Result<()>;
}

/// Time stepping and sampling parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SdeConfig {
    pub dt: f64,
    pub steps: usize,
    pub n_traj: usize,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub renormalize: bool,
    /// Record every `record_every` steps (and at `t = 0`).
    #[serde(default = "default_one")]
    pub record_every: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
}

fn default_true() -> bool {
    true
}

fn default_one() -> usize {
    1
}

fn default_batches() -> usize {
    100
}

impl SdeConfig {
    pub fn new(dt: f64, steps: usize, n_traj: usize, seed: u64) -> Self {
        Self {
            dt,
            steps,
            n_traj,
            seed,
            renormalize: true,
            record_every: 1,
            batches: default_batches(),
        }
    }

    pub fn record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn batches(mut self, batches: usize) -> Self {
        self.batches = batches;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt = {} must be positive", self.dt)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidInput("record_every must be positive".into()));
        }
        check_batches(self.n_traj, self.batches)
    }

    /// Recording times.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps)
            .step_by(self.record_every)
            .map(|s| s as f64 * self.dt)
            .collect()
    }
}

/// Batch means of scalar observables recorded along trajectories.
#[derive(Debug, Clone)]
pub struct BatchSeries {
    pub times: Vec<f64>,
    pub n_obs: usize,
    /// `batch_means[b][t * n_obs + o]`
    pub batch_means: Vec<Vec<f64>>,
    /// Observables at the final time, one row per trajectory (if kept).
    pub finals: Vec<Vec<f64>>,
}

impl BatchSeries {
    pub fn estimate(&self, time: usize, obs: usize) -> Estimate {
        let k = time * self.n_obs + obs;
        let means: Vec<f64> = self.batch_means.iter().map(|b| b[k]).collect();
        from_batch_means(&means)
    }

    pub fn series(&self, obs: usize) -> Vec<Estimate> {
        (0..self.times.len()).map(|t| self.estimate(t, obs)).collect()
    }

    /// Index of the recorded time closest to `t`.
    pub fn time_index(&self, t: f64) -> usize {
        self.times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map_or(0, |(k, _)| k)
    }
}

/// Runs `cfg.n_traj` trajectories from `psi0` and records `n_obs` real
/// observables of the current state at every recording time.
pub fn run_batches<U, F>(
    unraveling: &U,
    psi0: &StateVector,
    cfg: &SdeConfig,
    stream_name: &str,
    n_obs: usize,
    keep_finals: bool,
    observe: F,
) -> Result<BatchSeries>
where
    U: Unraveling,
    F: Fn(&[C64], &mut [f64]) + Sync,
{
    cfg.validate()?;
    if psi0.len() != unraveling.dim() {
        return Err(Error::DimensionMismatch("initial state dimension".into()));
    }
    let times = cfg.times();
    let n_times = times.len();
    let ranges = batch_ranges(cfg.n_traj, cfg.batches);
    let results: Vec<Result<BatchSums>> = ranges
        .into_par_iter()
        .map(|range| {
            let mut sums = vec![0.0; n_times * n_obs];
            let mut finals = Vec::new();
            let mut ws = unraveling.workspace();
            let mut psi: Vec<C64> = psi0.iter().cloned().collect();
            let mut obs = vec![0.0; n_obs];
            let count = range.len() as f64;
            for traj in range {
                let mut rng = stream(cfg.seed, stream_name, traj as u64);
                psi.copy_from_slice(psi0.as_slice());
                let mut slot = 0;
                for step in 0..=cfg.steps {
                    if step > 0 {
                        unraveling.step(&mut psi, cfg.dt, cfg.renormalize, &mut rng, &mut ws)?;
                    }
                    if step % cfg.record_every == 0 {
                        observe(&psi, &mut obs);
                        let row = &mut sums[slot * n_obs..(slot + 1) * n_obs];
                        row.iter_mut().zip(&obs).for_each(|(s, o)| *s += o);
                        slot += 1;
                    }
                }
                if keep_finals {
                    observe(&psi, &mut obs);
                    finals.push(obs.clone());
                }
            }
            sums.iter_mut().for_each(|s| *s /= count);
            Ok((sums, finals))
        })
        .collect();
    let mut batch_means = Vec::with_capacity(cfg.batches);
    let mut finals = Vec::new();
    for r in results {
        let (m, f) = r?;
        batch_means.push(m);
        finals.extend(f);
    }
    Ok(BatchSeries {
        times,
        n_obs,
        batch_means,
        finals,
    })
}

/// Real and imaginary parts of `Π_ℓ ρ_{iℓ jℓ}` for orders `1..=max_order`,
/// concatenated: the observable layout used by [`run_ensemble`].
pub fn tensor_observables(psi: &[C64], max_order: usize, out: &mut [f64]) {
    let d = psi.len();
    let mut codes = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            codes.push(psi[i] * psi[j].conj());
        }
    }
    let mut prod = vec![C64::new(1.0, 0.0)];
    let mut offset = 0;
    for _ in 0..max_order {
        prod = extend_outer(&prod, &codes);
        for (k, z) in prod.iter().enumerate() {
            out[offset + 2 * k] = z.re;
            out[offset + 2 * k + 1] = z.im;
        }
        offset += 2 * prod.len();
    }
}

fn tensor_obs_len(d: usize, max_order: usize) -> usize {
    (1..=max_order).map(|n| 2 * (d * d).pow(n as u32)).sum()
}

/// Density tensor estimates of orders `1..=max_order` at every recording
/// time.
#[derive(Debug, Clone)]
pub struct TensorSeries {
    pub times: Vec<f64>,
    /// `orders[n − 1][time]`
    pub orders: Vec<Vec<TensorEstimate>>,
}

impl TensorSeries {
    pub fn at(&self, order: usize, time: usize) -> &TensorEstimate {
        &self.orders[order - 1][time]
    }
}

/// Trajectory averages of `ρ^{⊗n}` for `n = 1..=max_order`.
pub fn run_ensemble<U: Unraveling>(
    unraveling: &U,
    psi0: &StateVector,
    cfg: &SdeConfig,
    stream_name: &str,
    max_order: usize,
) -> Result<TensorSeries> {
    let d = unraveling.dim();
    for n in 1..=max_order {
        checked_len(n, d)?;
    }
    let n_obs = tensor_obs_len(d, max_order);
    let series = run_batches(unraveling, psi0, cfg, stream_name, n_obs, false, |psi, out| {
        tensor_observables(psi, max_order, out)
    })?;
    let mut orders = Vec::with_capacity(max_order);
    let mut offset = 0;
    for n in 1..=max_order {
        let len = (d * d).pow(n as u32);
        let mut per_time = Vec::with_capacity(series.times.len());
        for t in 0..series.times.len() {
            let base = t * n_obs + offset;
            let batches: Vec<Vec<C64>> = series
                .batch_means
                .iter()
                .map(|b| (0..len).map(|k| C64::new(b[base + 2 * k], b[base + 2 * k + 1])).collect())
                .collect();
            let mut mean = vec![ZERO; len];
            for b in &batches {
                mean.iter_mut().zip(b).for_each(|(m, x)| *m += x);
            }
            mean.iter_mut().for_each(|m| *m /= batches.len() as f64);
            per_time.push(TensorEstimate::from_batches(&batches, mean, n, d)?);
        }
        orders.push(per_time);
        offset += 2 * len;
    }
    Ok(TensorSeries {
        times: series.times,
        orders,
    })
}

/// Rescales `psi` to unit norm.
#[inline]
pub fn renormalize(psi: &mut [C64]) {
    let n = norm_sqr(psi).sqrt();
    if n > 0.0 {
        psi.iter_mut().for_each(|z| *z /= n);
    }
}

/// Flavor-tagged density tensor of a single pure state, `ρ^{⊗n}`.
pub fn pure_power(psi: &StateVector, n: usize) -> Result<PairTensor> {
    let rho = crate::matrix::projector(psi);
    PairTensor::outer_product(&vec![rho; n], Flavor::Classical)
}
