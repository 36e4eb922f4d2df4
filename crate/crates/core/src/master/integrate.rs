// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Fixed-step RK4 co-integration of `ρ⁽¹⁾` and a driven higher tensor.
//!
//! `ρ⁽¹⁾` obeys its closed equation and `ρ⁽ⁿ⁾` is driven by the order-`n`
//! drift evaluated at the RK4 stage values of `ρ⁽¹⁾`. For `n ≥ 2` a
//! companion order-`(n−1)` tensor is driven by the drift with one slot at
//! `(ρ⁽¹⁾)²`, starting from the chain contraction of `ρ⁽ⁿ⁾(0)`; the descent
//! identity makes it track the chain contraction of `ρ⁽ⁿ⁾(t)`.

use serde::{Deserialize, Serialize};

use super::Generator;
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};
use crate::tensor::PairTensor;

/// Steps below this are rejected.
pub const MIN_DT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RkConfig {
    /// Largest step; each output interval is split into equal steps.
    pub dt: f64,
    /// Repeat at `dt/2` and report the Richardson error estimate.
    #[serde(default)]
    pub estimate_error: bool,
}

#[derive(Debug, Clone)]
pub struct HierarchySeries {
    pub times: Vec<f64>,
    pub rho1: Vec<ComplexMatrix>,
    pub tensor: Vec<PairTensor>,
    /// Order-`(n−1)` companion, empty for `n = 1`.
    pub companion: Vec<PairTensor>,
    /// `max |y_dt − y_{dt/2}| / 15` over the final state, if requested.
    pub error_estimate: Option<f64>,
}

impl HierarchySeries {
    /// Largest deviation between the chain contraction `0 → 1` of the
    /// tensor and the companion over the run.
    pub fn descent_drift(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (t, c) in self.tensor.iter().zip(&self.companion) {
            worst = worst.max(t.contract_chain(0, 1)?.max_abs_diff(c));
        }
        Ok(worst)
    }
}

struct State {
    rho1: ComplexMatrix,
    tensor: PairTensor,
    companion: Option<PairTensor>,
}

fn drive<G: Generator + ?Sized>(gen: &G, rho: &ComplexMatrix, n: usize) -> Result<(ComplexMatrix, PairTensor, Option<PairTensor>)> {
    let first = gen.first_order(rho)?;
    let tensor = gen.expansion(&vec![rho.clone(); n])?.to_tensor()?;
    let companion = if n >= 2 {
        let mut slots = vec![rho.clone(); n - 1];
        slots[0] = rho * rho;
        Some(gen.expansion(&slots)?.to_tensor()?)
    } else {
        None
    };
    Ok((first, tensor, companion))
}

fn rk4_step<G: Generator + ?Sized>(gen: &G, s: &mut State, h: f64) -> Result<()> {
    let n = s.tensor.order();
    let c = |x: f64| C64::new(x, 0.0);
    let (k1, t1, c1) = drive(gen, &s.rho1, n)?;
    let y2 = &s.rho1 + &k1 * c(h / 2.0);
    let (k2, t2, c2) = drive(gen, &y2, n)?;
    let y3 = &s.rho1 + &k2 * c(h / 2.0);
    let (k3, t3, c3) = drive(gen, &y3, n)?;
    let y4 = &s.rho1 + &k3 * c(h);
    let (k4, t4, c4) = drive(gen, &y4, n)?;
    s.rho1 += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(h / 6.0);
    for (w, t) in [(1.0, &t1), (2.0, &t2), (2.0, &t3), (1.0, &t4)] {
        s.tensor.axpy(c(w * h / 6.0), t)?;
    }
    if let Some(comp) = s.companion.as_mut() {
        for (w, t) in [(1.0, c1), (2.0, c2), (2.0, c3), (1.0, c4)] {
            comp.axpy(c(w * h / 6.0), &t.expect("companion drift for n ≥ 2"))?;
        }
    }
    Ok(())
}

fn run<G: Generator + ?Sized>(
    gen: &G,
    rho1: &ComplexMatrix,
    rhon: &PairTensor,
    times: &[f64],
    dt: f64,
) -> Result<(Vec<ComplexMatrix>, Vec<PairTensor>, Vec<PairTensor>)> {
    let n = rhon.order();
    let companion = if n >= 2 { Some(rhon.contract_chain(0, 1)?) } else { None };
    let mut s = State {
        rho1: rho1.clone(),
        tensor: rhon.clone(),
        companion,
    };
    let mut out = (vec![s.rho1.clone()], vec![s.tensor.clone()], Vec::new());
    if let Some(c) = &s.companion {
        out.2.push(c.clone());
    }
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let steps = (span / dt).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        if h < MIN_DT && span > 0.0 {
            return Err(Error::StepTooSmall(h));
        }
        for _ in 0..steps {
            if span > 0.0 {
                rk4_step(gen, &mut s, h)?;
            }
        }
        out.0.push(s.rho1.clone());
        out.1.push(s.tensor.clone());
        if let Some(c) = &s.companion {
            out.2.push(c.clone());
        }
    }
    Ok(out)
}

/// Integrates `(ρ⁽¹⁾, ρ⁽ⁿ⁾)` from `times[0]` and records at every entry of
/// `times` (nondecreasing).
pub fn integrate_hierarchy<G: Generator + ?Sized>(
    gen: &G,
    rho1: &ComplexMatrix,
    rhon: &PairTensor,
    times: &[f64],
    cfg: RkConfig,
) -> Result<HierarchySeries> {
    if !(cfg.dt >= MIN_DT && cfg.dt.is_finite()) {
        return Err(Error::StepTooSmall(cfg.dt));
    }
    if times.is_empty() || times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidInput("output times must be nondecreasing and nonempty".into()));
    }
    let d = gen.dim();
    if rho1.nrows() != d || rho1.ncols() != d || rhon.dim() != d {
        return Err(Error::DimensionMismatch(format!("initial data must have dimension {d}")));
    }
    let (r1, tn, comp) = run(gen, rho1, rhon, times, cfg.dt)?;
    let error_estimate = if cfg.estimate_error {
        let (h1, hn, _) = run(gen, rho1, rhon, times, cfg.dt / 2.0)?;
        let a = crate::matrix::max_abs_diff(r1.last().expect("nonempty"), h1.last().expect("nonempty"));
        let b = tn.last().expect("nonempty").max_abs_diff(hn.last().expect("nonempty"));
        Some(a.max(b) / 15.0)
    } else {
        None
    };
    Ok(HierarchySeries {
        times: times.to_vec(),
        rho1: r1,
        tensor: tn,
        companion: comp,
        error_estimate,
    })
}
