// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! End-to-end acceptance suite. Every criterion prints one PASS/FAIL line;
//! the process exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::DVector;
use noisetensor::ensemble::{generating_descent_defects, WeightedEnsemble};
use noisetensor::ito::ItoUnraveling;
use noisetensor::jump::{JumpModel, Offsets};
use noisetensor::lindblad::LindbladModel;
use noisetensor::master::{
    descent_defect, integrate_hierarchy, optical_rate, BornMarkov, CaldeiraLeggett, Channel, Collisional,
    KernelQuadrature, MomentumDistribution, OpticalTransition, ProductExpansion, QuantumOptical, RkConfig,
    ScatteringModel,
};
use noisetensor::master::collisional::pure_grid_tensor;
use noisetensor::matrix::{
    anticommutator, basis_state, commutator, identity, kron, max_abs_diff, projector, random_density_matrix,
    random_hermitian, random_matrix, random_state, sigma_minus, sigma_z, unitary_propagator, zeros,
};
use noisetensor::qtensor::{pointer_rate_bound, pointer_variance, pointer_variance_rate, BipartiteState};
use noisetensor::reduction::{
    outcome_statistics, run_reduction, unraveling_contrast, variance_rate_check, ReductionExperiment, Variant,
    DEFAULT_THRESHOLD,
};
use noisetensor::spin::{analytic_generating, analytic_tensor, sample_sphere};
use noisetensor::stats::batch_estimate;
use noisetensor::trajectory::{SdeConfig, TensorSeries};
use noisetensor::{ComplexMatrix, Flavor, PairTensor, StateVector, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20260418;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn plus() -> StateVector {
    (basis_state(2, 0) + basis_state(2, 1)).unscale(2f64.sqrt())
}

fn within_time(start: Instant, limit: Duration) -> (bool, String) {
    let e = start.elapsed();
    (e < limit, format!("{:.1}s of {}s", e.as_secs_f64(), limit.as_secs()))
}

fn spin_analytics() -> Verdict {
    let start = Instant::now();
    let ens = sample_sphere(1_000_000, SEED).unwrap();
    let mut worst_z: f64 = 0.0;
    for n in 1..=3 {
        let est = ens.density_tensor_with_errors(n, 100).unwrap();
        worst_z = worst_z.max(est.max_z_score(&analytic_tensor(n).unwrap(), 1e-12));
    }
    let mut worst_descent: f64 = 0.0;
    for n in 2..=3 {
        let upper = analytic_tensor(n).unwrap();
        let lower = analytic_tensor(n - 1).unwrap();
        for slot in 0..n {
            worst_descent = worst_descent.max(upper.contract_trace(slot).unwrap().max_abs_diff(&lower));
            for to in (0..n).filter(|&t| t != slot) {
                worst_descent = worst_descent.max(upper.contract_chain(slot, to).unwrap().max_abs_diff(&lower));
            }
        }
    }
    let (fast, time) = within_time(start, Duration::from_secs(60));
    Verdict::new(
        worst_z <= 3.0 && worst_descent <= 1e-12 && fast,
        format!("max z {worst_z:.2} (≤ 3), descent defect {worst_descent:.1e} (≤ 1e-12), {time}"),
    )
}

fn random_lindblad(rng: &mut ChaCha8Rng, dim: usize, real: bool) -> LindbladModel {
    let h = random_hermitian(rng, dim);
    let ops = vec![random_matrix(rng, dim, dim), random_matrix(rng, dim, dim)];
    if real {
        LindbladModel::with_real_noise(h, ops).unwrap()
    } else {
        LindbladModel::with_isotropic_noise(h, ops).unwrap()
    }
}

fn generating_descent() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let h = 1e-2;
    let mut worst = [0.0f64; 3];
    for trial in 0..20 {
        let a2 = random_matrix(&mut rng, 2, 2) * c(0.5);
        let (t, ch) = generating_descent_defects(|b| analytic_generating(b).unwrap(), &a2, h);
        worst[0] = worst[0].max(t.max(ch));

        let model = random_lindblad(&mut rng, 3, trial % 2 == 0);
        let psi = random_state(&mut rng, 3);
        let a3 = random_matrix(&mut rng, 3, 3) * c(0.5);
        let ito = ItoUnraveling::new(model.clone()).unwrap();
        let (t, ch) = generating_descent_defects(|b| ito.generating_drift(&psi, b).unwrap(), &a3, h);
        worst[1] = worst[1].max(t.max(ch));

        let offsets = if trial % 2 == 0 {
            Offsets::Orthogonal
        } else {
            Offsets::Constant(vec![C64::new(0.3, -0.1), C64::new(-0.2, 0.4)])
        };
        let jump = JumpModel::new(model, offsets).unwrap();
        let (t, ch) = generating_descent_defects(|b| jump.generating_drift(&psi, b).unwrap(), &a3, h);
        worst[2] = worst[2].max(t.max(ch));
    }
    let (fast, time) = within_time(start, Duration::from_secs(60));
    Verdict::new(
        worst.iter().all(|&w| w <= 1e-6) && fast,
        format!(
            "defects spin {:.1e}, Itô {:.1e}, jump {:.1e} (≤ 1e-6), {time}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn variance_decomposition() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let dim = rng.random_range(2..=4);
        let m = rng.random_range(1..=6);
        let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let members: Vec<(f64, StateVector)> = raw.iter().map(|w| (w / total, random_state(&mut rng, dim))).collect();
        let r = random_hermitian(&mut rng, dim);
        let ens = WeightedEnsemble::new(dim, members.clone()).unwrap();
        let (var, v1, v2) = ens.variance_decomposition(&r).unwrap();
        // direct sums over members
        let r2 = &r * &r;
        let mut mean = 0.0;
        let mut second = 0.0;
        let mut within = 0.0;
        for (w, psi) in &members {
            let e1 = psi.dotc(&(&r * psi)).re;
            let e2 = psi.dotc(&(&r2 * psi)).re;
            mean += w * e1;
            second += w * e2;
            within += w * (e2 - e1 * e1);
        }
        let direct = second - mean * mean;
        worst = worst
            .max((var - v1 - v2).abs())
            .max((var - direct).abs())
            .max((v1 - within).abs());
    }
    let sphere = sample_sphere(1_000_000, SEED + 33).unwrap();
    let (var, v1, v2) = sphere.variance_decomposition(&sigma_z()).unwrap();
    let z: Vec<f64> = sphere.states().iter().map(|psi| psi.dotc(&(sigma_z() * psi)).re).collect();
    let z2: Vec<f64> = z.iter().map(|x| x * x).collect();
    let se_m = batch_estimate(&z, 100).unwrap().stderr;
    let se_q = batch_estimate(&z2, 100).unwrap().stderr;
    let ok_iso = (var - 1.0).abs() <= 9.0 * se_m * se_m
        && (v1 - 2.0 / 3.0).abs() <= 3.0 * se_q
        && (v2 - 1.0 / 3.0).abs() <= 3.0 * se_q + 9.0 * se_m * se_m;
    Verdict::new(
        worst <= 1e-10 && ok_iso,
        format!(
            "split defect {worst:.1e} (≤ 1e-10); isotropic σ³ ({var:.6}, {v1:.6}, {v2:.6}) vs (1, 2/3, 1/3) with stderr {se_q:.1e}"
        ),
    )
}

/// Largest first-order gap at any time and largest second-order gap at the
/// final time, in combined standard errors.
fn contrast(a: &TensorSeries, b: &TensorSeries) -> (f64, f64) {
    let first = (0..a.times.len())
        .map(|t| a.at(1, t).max_z_difference(b.at(1, t), 1e-12))
        .fold(0.0, f64::max);
    let last = a.times.len() - 1;
    (first, a.at(2, last).max_z_difference(b.at(2, last), 1e-12))
}

fn unraveling_sensitivity() -> Verdict {
    let start = Instant::now();
    let cfg = SdeConfig::new(1e-3, 1000, 100_000, SEED + 4).record_every(100);
    let (reducing, nonreducing) = unraveling_contrast(&sigma_z(), &plus(), &cfg, 2).unwrap();
    let (first, second) = contrast(&reducing, &nonreducing);
    let (fast, time) = within_time(start, Duration::from_secs(300));
    Verdict::new(
        first <= 4.0 && second > 5.0 && fast,
        format!("ρ⁽¹⁾ max gap {first:.2} stderr (≤ 4), ρ⁽²⁾ max gap at t = 1 {second:.1} stderr (> 5), {time}"),
    )
}

fn jump_engine() -> Verdict {
    let decay = LindbladModel::with_isotropic_noise(zeros(2), vec![sigma_minus()]).unwrap();
    let cfg = SdeConfig::new(1e-3, 2000, 100_000, SEED + 5).record_every(100);
    let standard = JumpModel::standard(decay.clone()).unwrap();
    let series = standard.run_ensemble(&basis_state(2, 1), &cfg, 1).unwrap();
    let decay_z = |k: usize| {
        let est = series.at(1, k);
        let idx = est.mean.offset(&[1, 1]);
        let gap = (est.mean.entries()[idx].re - (-series.times[k]).exp()).abs();
        if gap <= 1e-12 {
            0.0
        } else {
            gap / est.stderr_re[idx]
        }
    };
    let one_lifetime = decay_z(series.times.iter().position(|t| (t - 1.0).abs() < 1e-9).expect("t = 1 is recorded"));
    let worst_decay = (0..series.times.len()).map(decay_z).fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 55);
    let mut worst_identity: f64 = 0.0;
    for trial in 0..100 {
        let model = random_lindblad(&mut rng, 3, false);
        let offsets = if trial % 2 == 0 {
            Offsets::Orthogonal
        } else {
            Offsets::Constant(vec![C64::new(0.3, -0.2), C64::new(-0.5, 0.1)])
        };
        let j = JumpModel::new(model.clone(), offsets).unwrap();
        let psi = random_state(&mut rng, 3);
        let rho = projector(&psi);
        let l = model.rhs(&rho).unwrap();
        let rates = j.jump_rates(&psi);
        let (_, qs) = j.jump_operators(&psi).unwrap();
        let mut rhs = l.clone();
        for (v, q) in rates.iter().zip(&qs) {
            rhs -= q * q * c(*v);
            worst_identity = worst_identity.max(max_abs_diff(&anticommutator(&rho, q), &(q - q * q)));
        }
        worst_identity = worst_identity.max(max_abs_diff(&anticommutator(&rho, &l), &rhs));
        let (drift, jump) = j.constraint_defects(&psi);
        worst_identity = worst_identity.max(drift).max(jump);
    }

    let cfg = SdeConfig::new(1e-3, 1000, 100_000, SEED + 6).record_every(100);
    let zero_offset = standard.run_ensemble(&plus(), &cfg, 2).unwrap();
    let cfg = SdeConfig::new(1e-3, 1000, 100_000, SEED + 7).record_every(100);
    let mean_offset = JumpModel::new(decay, Offsets::Orthogonal).unwrap().run_ensemble(&plus(), &cfg, 2).unwrap();
    let (first, second) = contrast(&zero_offset, &mean_offset);
    Verdict::new(
        one_lifetime <= 3.0 && worst_identity <= 1e-10 && first <= 4.0 && second > 5.0,
        format!(
            "decay z at t = 1 {one_lifetime:.2} (≤ 3), largest over 0 ≤ t ≤ 2 {worst_decay:.2}, jump identities {worst_identity:.1e} (≤ 1e-10), K = 0 vs ⟨c⟩: ρ⁽¹⁾ gap {first:.2} (≤ 4), ρ⁽²⁾ gap {second:.1} (> 5) stderr"
        ),
    )
}

fn quantum_trace_hierarchy() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let mut worst_descent: f64 = 0.0;
    let mut worst_fluct: f64 = 0.0;
    for _ in 0..50 {
        let de = rng.random_range(1..=4);
        let ds = rng.random_range(2..=4);
        let s = BipartiteState::from_pure(de, ds, &random_state(&mut rng, de * ds)).unwrap();
        let mut lower = s.trace_tensor(1).unwrap();
        for n in 2..=3 {
            let upper = s.trace_tensor(n).unwrap();
            for from in 0..n {
                let contracted = upper.contract_chain(from, (from + 1) % n).unwrap();
                worst_descent = worst_descent.max(contracted.max_abs_diff(&lower));
            }
            lower = upper;
        }
        let a = random_hermitian(&mut rng, ds);
        let direct = s.environment_fluctuation(&a).unwrap();
        let tensors = s.environment_fluctuation_from_tensors(&a).unwrap();
        worst_fluct = worst_fluct.max((direct - tensors).abs());
    }
    let bell = BipartiteState::bell().trace_tensor(2).unwrap();
    let oracle = PairTensor::from_fn(2, 2, Flavor::Quantum, |x| {
        c(if x[0] == x[3] && x[1] == x[2] { 0.25 } else { 0.0 })
    })
    .unwrap();
    let bell_gap = bell.max_abs_diff(&oracle);
    Verdict::new(
        worst_descent <= 1e-12 && bell_gap <= 1e-12 && worst_fluct <= 1e-10,
        format!(
            "chain descent {worst_descent:.1e} (≤ 1e-12), Bell gap {bell_gap:.1e}, fluctuation forms {worst_fluct:.1e} (≤ 1e-10)"
        ),
    )
}

fn random_psd(rng: &mut ChaCha8Rng, k: usize) -> ComplexMatrix {
    let g = random_matrix(rng, k, k);
    &g * g.adjoint()
}

fn random_born_markov(rng: &mut ChaCha8Rng, dim: usize) -> BornMarkov {
    let mut channels = Vec::new();
    for w in 0..rng.random_range(1..=2) {
        let k = rng.random_range(1..=2);
        let ops: Vec<ComplexMatrix> = (0..k).map(|_| random_matrix(rng, dim, dim)).collect();
        let omega = 0.5 + w as f64;
        channels.push(Channel {
            omega,
            ops: ops.clone(),
            gamma: random_psd(rng, k),
            shift: random_hermitian(rng, k),
        });
        channels.push(Channel {
            omega: -omega,
            ops: ops.iter().map(|a| a.adjoint()).collect(),
            gamma: random_psd(rng, k),
            shift: random_hermitian(rng, k),
        });
    }
    BornMarkov::new(dim, channels).unwrap()
}

fn random_optical(rng: &mut ChaCha8Rng, dim: usize) -> BornMarkov {
    let transitions = (0..rng.random_range(1..=2))
        .map(|w| OpticalTransition {
            omega: 0.7 + w as f64,
            dipole: (0..3).map(|_| random_matrix(rng, dim, dim)).collect(),
            shift: [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)],
        })
        .collect();
    let beta = if rng.random_bool(0.5) { Some(rng.random_range(0.5..3.0)) } else { None };
    QuantumOptical {
        dim,
        beta,
        transitions,
    }
    .to_born_markov()
    .unwrap()
}

fn born_markov_descent() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let dim = rng.random_range(2..=3);
        let bm = if trial % 2 == 0 {
            random_born_markov(&mut rng, dim)
        } else {
            random_optical(&mut rng, dim)
        };
        let rho = random_density_matrix(&mut rng, dim);
        for n in 2..=3 {
            for from in 0..n {
                worst = worst.max(descent_defect(&bm, &rho, n, from).unwrap());
            }
        }
    }
    let gen = QuantumOptical::two_level(1.0, None).to_born_markov().unwrap();
    let gamma0 = optical_rate(1.0, None);
    let excited = projector(&basis_state(2, 1));
    let t2 = PairTensor::outer_product(&[excited.clone(), excited.clone()], Flavor::Quantum).unwrap();
    let times: Vec<f64> = (0..=20).map(|k| 0.1 * k as f64).collect();
    let series = integrate_hierarchy(&gen, &excited, &t2, &times, RkConfig { dt: 1e-3 / gamma0, estimate_error: false }).unwrap();
    let decay_gap = times
        .iter()
        .zip(&series.rho1)
        .map(|(t, r)| (r[(1, 1)].re - (-gamma0 * t).exp()).abs())
        .fold(0.0, f64::max);
    Verdict::new(
        worst <= 1e-10 && decay_gap <= 1e-6,
        format!("generator descent {worst:.1e} (≤ 1e-10), two-level decay gap {decay_gap:.1e} (≤ 1e-6)"),
    )
}

fn caldeira_leggett_descent() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let mut worst: f64 = 0.0;
    let mut worst_cancel: f64 = 0.0;
    for dim in [8, 16] {
        for free in [false, true] {
            let cl = CaldeiraLeggett::new(dim, rng.random_range(0.5..2.0), rng.random_range(0.1..1.0), rng.random_range(0.5..3.0), free).unwrap();
            let rho = random_density_matrix(&mut rng, dim);
            for n in 2..=3 {
                for from in 0..n {
                    worst = worst.max(descent_defect(&cl, &rho, n, from).unwrap());
                }
            }
            let x = cl.position();
            let sq = &rho * &rho;
            let mut target = ProductExpansion::new(1, dim).unwrap();
            target.push(vec![commutator(x, &commutator(x, &sq)) * c(-2.0 * cl.mass * cl.gamma * cl.kt)]);
            let cancel = cl.diffusion_expansion(&rho).unwrap().chain_descent_defect(0, 1, &target).unwrap();
            worst_cancel = worst_cancel.max(cancel);
        }
    }
    Verdict::new(
        worst <= 1e-8 && worst_cancel <= 1e-10,
        format!("descent at dims 8, 16: {worst:.1e} (≤ 1e-8), sandwiched diffusion cancellation {worst_cancel:.1e} (≤ 1e-10)"),
    )
}

fn collisional_hierarchy() -> Verdict {
    let grid: Vec<[f64; 3]> = vec![
        [0.0, 0.0, 0.0],
        [0.6, 0.0, 0.0],
        [0.0, 0.9, 0.0],
        [0.3, -0.4, 0.8],
        [-1.2, 0.5, 0.2],
    ];
    let model = ScatteringModel {
        density: 0.8,
        mass: 1.5,
        momentum: MomentumDistribution::Gaussian { width: 1.1 },
        amplitude: [0.9, 0.4],
    };
    let coll = Collisional::from_scattering(grid, &model, KernelQuadrature::default()).unwrap();
    let psi = random_state(&mut ChaCha8Rng::seed_from_u64(SEED + 9), 5);
    let mut worst_descent: f64 = 0.0;
    for t in [0.0, 0.4, 1.5] {
        let mut lower = coll.evolve(&pure_grid_tensor(&psi, 1).unwrap(), t).unwrap();
        for n in 2..=3 {
            let upper = coll.evolve(&pure_grid_tensor(&psi, n).unwrap(), t).unwrap();
            for from in 0..n {
                worst_descent = worst_descent.max(upper.contract_chain(from, (from + 1) % n).unwrap().max_abs_diff(&lower));
            }
            lower = upper;
        }
    }
    let swap = coll.exponent_tensor(2).unwrap().full_symmetry_defect();
    let e3 = coll.exponent_tensor(3).unwrap();
    let (fs, fa) = coll.third_order_split().unwrap();
    let mut sum = fs.clone();
    sum.axpy(c(1.0), &fa).unwrap();
    let split = sum
        .max_abs_diff(&e3)
        .max(fs.full_symmetry_defect())
        .max(fa.antisymmetric_part().max_abs_diff(&fa));
    let nontrivial = fa.max_abs();
    Verdict::new(
        worst_descent <= 1e-12 && swap <= 1e-12 && split <= 1e-12 && nontrivial > 1e-6,
        format!(
            "descent {worst_descent:.1e}, pair swap {swap:.1e}, symmetric/antisymmetric split {split:.1e} (all ≤ 1e-12), |Fᴬ| = {nontrivial:.2e}"
        ),
    )
}

fn reduction_contrast() -> Verdict {
    let start = Instant::now();
    let cfg = SdeConfig::new(1e-3, 600, 100_000, SEED + 10).record_every(10);
    let base = ReductionExperiment::new(sigma_z(), Variant::Nonreducing, plus(), cfg).unwrap();
    let flat = run_reduction(&base).unwrap();
    let flat_z = flat.max_variance_deviation(1.0);
    let reducing = run_reduction(&base.with_variant(Variant::Reducing)).unwrap();
    let rise_z = reducing.max_variance_increase();
    let mut rate_z: f64 = 0.0;
    let mut rates = Vec::new();
    for t in [0.0, 0.2, 0.5] {
        let check = variance_rate_check(&reducing, t).unwrap();
        rate_z = rate_z.max(check.z_score());
        rates.push(format!("{:.3}/{:.3}", check.measured.mean, check.predicted.mean));
    }
    let psi0 = StateVector::from_vec(vec![c(0.3f64.sqrt()), c(0.7f64.sqrt())]);
    let cfg = SdeConfig::new(1e-3, 8000, 100_000, SEED + 11).record_every(8000);
    let outcome = ReductionExperiment::new(sigma_z(), Variant::Reducing, psi0, cfg).unwrap();
    let table = outcome_statistics(&run_reduction(&outcome).unwrap(), DEFAULT_THRESHOLD).unwrap();
    let born_z = table.max_z_score();
    let (fast, time) = within_time(start, Duration::from_secs(600));
    Verdict::new(
        flat_z <= 3.0 && rise_z <= 3.0 && rate_z <= 4.0 && born_z <= 4.0 && fast,
        format!(
            "flat z {flat_z:.2} (≤ 3), largest rise z {rise_z:.2} (≤ 3), rate z {rate_z:.2} (≤ 4) [measured/predicted {}], outcomes ({:.4}, {:.4}) z {born_z:.2} (≤ 4) from {} of {} reduced, {time}",
            rates.join(", "),
            table.frequencies[0].mean,
            table.frequencies[1].mean,
            table.converged,
            table.total
        ),
    )
}

fn pointer_rate() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 12);
    let mut worst_gap: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..20 {
        let de = rng.random_range(2..=3);
        let ds = rng.random_range(2..=4);
        let eig: Vec<C64> = (0..ds).map(|_| c(rng.random_range(-2.0..2.0))).collect();
        let a = ComplexMatrix::from_diagonal(&DVector::from_vec(eig));
        let mut h_int = ComplexMatrix::zeros(de * ds, de * ds);
        for k in 0..ds {
            let proj = projector(&basis_state(ds, k));
            h_int += kron(&random_hermitian(&mut rng, de), &proj);
        }
        let h_sys = random_hermitian(&mut rng, ds);
        let h_env = random_hermitian(&mut rng, de);
        let s = BipartiteState::from_pure(de, ds, &random_state(&mut rng, de * ds)).unwrap();
        let rate = pointer_variance_rate(&s, &h_sys, &h_env, &h_int, &a).unwrap();
        let h_tot = kron(&identity(de), &h_sys) + kron(&h_env, &identity(ds)) + &h_int;
        let var_at = |t: f64| {
            let u = unitary_propagator(&h_tot, t);
            let rho = &u * s.rho() * u.adjoint();
            pointer_variance(&BipartiteState::new(de, ds, rho, true).unwrap(), &a)
        };
        let dt = 1e-5;
        let fd = (var_at(dt) - var_at(-dt)) / (2.0 * dt);
        worst_gap = worst_gap.max((rate - fd).abs());
        worst_ratio = worst_ratio.max(rate.abs() / pointer_rate_bound(&s, &h_sys, &a));
    }
    Verdict::new(
        worst_gap <= 1e-6 && worst_ratio <= 1.0 + 1e-12,
        format!("rate vs exact evolution {worst_gap:.1e} (≤ 1e-6), largest |rate|/bound {worst_ratio:.3} (≤ 1)"),
    )
}

fn bits(series: &TensorSeries) -> Vec<u64> {
    let mut out = Vec::new();
    for order in &series.orders {
        for est in order {
            out.extend(est.mean.entries().iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]));
            out.extend(est.stderr_re.iter().chain(&est.stderr_im).map(|x| x.to_bits()));
        }
    }
    out
}

fn stochastic_fingerprint() -> Vec<u64> {
    let cfg = SdeConfig::new(1e-3, 200, 2000, SEED + 13).record_every(20);
    let mut out = Vec::new();
    let ito = ItoUnraveling::new(LindbladModel::with_isotropic_noise(sigma_z(), vec![sigma_minus(), sigma_z()]).unwrap()).unwrap();
    out.extend(bits(&ito.run_ensemble(&plus(), &cfg, 2).unwrap()));
    let jump = JumpModel::new(LindbladModel::with_isotropic_noise(zeros(2), vec![sigma_minus()]).unwrap(), Offsets::Orthogonal).unwrap();
    out.extend(bits(&jump.run_ensemble(&plus(), &cfg, 2).unwrap()));
    let (r, n) = unraveling_contrast(&sigma_z(), &plus(), &cfg, 2).unwrap();
    out.extend(bits(&r));
    out.extend(bits(&n));
    let exp = ReductionExperiment::new(sigma_z(), Variant::Reducing, plus(), cfg).unwrap();
    let run = run_reduction(&exp).unwrap();
    out.extend(run.series.batch_means.iter().flatten().map(|x| x.to_bits()));
    out.extend(run.series.finals.iter().flatten().map(|x| x.to_bits()));
    let sphere = sample_sphere(50_000, SEED + 14).unwrap();
    let est = sphere.density_tensor_with_errors(2, 50).unwrap();
    out.extend(est.mean.entries().iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]));
    out
}

fn determinism() -> Verdict {
    let run_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(stochastic_fingerprint)
    };
    let reference = run_with(1);
    let repeat = run_with(1);
    let parallel = run_with(4);
    let wide = run_with(7);
    let same = reference == repeat && reference == parallel && reference == wide;
    Verdict::new(same, format!("{} numbers identical across reruns and 1, 4, 7 threads", reference.len()))
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 12] = [
        ("spin analytics", spin_analytics),
        ("generating-function descent", generating_descent),
        ("variance decomposition", variance_decomposition),
        ("unraveling sensitivity", unraveling_sensitivity),
        ("jump engine", jump_engine),
        ("quantum trace hierarchy", quantum_trace_hierarchy),
        ("weak-coupling generator descent", born_markov_descent),
        ("Caldeira-Leggett descent", caldeira_leggett_descent),
        ("collisional hierarchy", collisional_hierarchy),
        ("reduction contrast", reduction_contrast),
        ("pointer rate", pointer_rate),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::new(false, format!("panicked: {msg}"))
        });
        if !verdict.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<32} {}  {}",
            k + 1,
            name,
            if verdict.pass { "PASS" } else { "FAIL" },
            verdict.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
