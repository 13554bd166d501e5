//! Search for the tightest uncertainty bound over probe states, measurement
//! settings and evolution time.
//!
//! The optimizer is a (mu, lambda) evolution strategy with stochastic
//! ranking and log-normal self-adaptation of the per-coordinate step sizes.
//! Candidates are kept inside their boxes by resampling (then clamping), so
//! the penalty term is zero for every evaluated point and the ranking reduces
//! to an objective sort; the penalty machinery is retained so that the
//! ranking behaves sensibly if infeasible points ever enter the population.
//! Restarts re-seed the generator on separate streams and the best point
//! across all restarts is reported.

use crate::error::{Error, Result};
use crate::estimation::{Evaluator, ExperimentConfig, FisherResult};
use crate::model::{
    HamiltonianSpec, LocalUnitaryAngles, MeasurementParams, ProbeParams, ProjectorAngles,
};
use crate::par::par_map;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const PI: f64 = std::f64::consts::PI;
const TWO_PI: f64 = 2.0 * PI;

/// Shortest evolution time considered by the search.
pub const T_MIN: f64 = 0.01;
/// Longest evolution time considered by the search.
pub const T_MAX: f64 = 2.0;
/// Objective value assigned to failed or unreliable evaluations.
pub const SENTINEL: f64 = 1e6;
/// Fisher information below which a point is treated as uninformative.
pub const FI_FLOOR: f64 = 1e-14;

const LAMBDA: usize = 40;
const MU: usize = 7;
const RANK_PF: f64 = 0.45;
const SIGMA_FLOOR_FACTOR: f64 = 1e-12;
const RESAMPLE_TRIES: usize = 10;

/// What the search minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    /// Bound from the classical Fisher information of explicit readout.
    MeasuredFi,
    /// Bound from the quantum Fisher information (readout optimized out).
    Qfi,
}

impl Objective {
    pub fn label(&self) -> &'static str {
        match self {
            Objective::MeasuredFi => "measured",
            Objective::Qfi => "qfi",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "measured" => Ok(Objective::MeasuredFi),
            "qfi" => Ok(Objective::Qfi),
            other => Err(Error::InvalidConfig(format!(
                "unknown objective '{other}' (expected measured|qfi)"
            ))),
        }
    }
}

/// Probe family searched over; the partially entangled family carries its
/// fixed Schmidt weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProbeFamilySpec {
    Product,
    MaxEntangled,
    Partial { alpha: f64 },
}

impl ProbeFamilySpec {
    pub fn label(&self) -> &'static str {
        match self {
            ProbeFamilySpec::Product => "product",
            ProbeFamilySpec::MaxEntangled => "entangled",
            ProbeFamilySpec::Partial { .. } => "partial",
        }
    }
}

/// One full search task.
#[derive(Clone, Copy, Debug)]
pub struct OptimizationTask {
    pub spec: HamiltonianSpec,
    pub probe_family: ProbeFamilySpec,
    pub objective: Objective,
    pub config: ExperimentConfig,
    /// Objective evaluations per restart.
    pub budget: usize,
    pub restarts: usize,
    pub rng_seed: u64,
}

/// Best point found by a search.
#[derive(Clone, Debug)]
pub struct Optimum {
    pub best_bound: f64,
    pub best_time: f64,
    pub best_probe: ProbeParams,
    pub best_meas: Option<MeasurementParams>,
    pub best_result: FisherResult,
    /// Best bound seen so far after each generation, across restarts.
    pub trace: Vec<f64>,
    pub evaluations_used: usize,
}

/// One entry of a bound-versus-time sweep.
#[derive(Clone, Copy, Debug)]
pub struct TimeScanPoint {
    pub t: f64,
    pub bound_product: f64,
    pub bound_entangled: f64,
}

/// One entry of a bound-versus-entanglement sweep.
#[derive(Clone, Copy, Debug)]
pub struct AlphaScanPoint {
    pub alpha: f64,
    pub concurrence: f64,
    pub bound: f64,
    pub best_time: f64,
}

// ---------------------------------------------------------------------------
// Parameter vector layout
// ---------------------------------------------------------------------------

fn angle_box(n: usize, lo: &mut Vec<f64>, hi: &mut Vec<f64>) {
    for _ in 0..n {
        lo.push(0.0);
        hi.push(TWO_PI);
    }
}

/// Box constraints for a task; `with_time` appends the evolution-time
/// coordinate (fixed-time scans omit it).
fn boxes(family: ProbeFamilySpec, objective: Objective, with_time: bool) -> (Vec<f64>, Vec<f64>) {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    match family {
        ProbeFamilySpec::Product => angle_box(4, &mut lo, &mut hi),
        ProbeFamilySpec::MaxEntangled | ProbeFamilySpec::Partial { .. } => {
            angle_box(6, &mut lo, &mut hi)
        }
    }
    if objective == Objective::MeasuredFi {
        match family {
            ProbeFamilySpec::Product => angle_box(4, &mut lo, &mut hi),
            ProbeFamilySpec::MaxEntangled | ProbeFamilySpec::Partial { .. } => {
                // Two outer and two inner local unitaries, then the core.
                angle_box(12, &mut lo, &mut hi);
                for _ in 0..3 {
                    lo.push(0.0);
                    hi.push(PI);
                }
            }
        }
    }
    if with_time {
        lo.push(T_MIN);
        hi.push(T_MAX);
    }
    (lo, hi)
}

fn local_from(x: &[f64]) -> LocalUnitaryAngles {
    LocalUnitaryAngles::new(x[0], x[1], x[2])
}

/// Decodes a parameter vector into a probe, an optional measurement and the
/// evolution time (`fixed_t` when the vector has no time coordinate).
fn decode(
    family: ProbeFamilySpec,
    objective: Objective,
    x: &[f64],
    fixed_t: Option<f64>,
) -> (ProbeParams, Option<MeasurementParams>, f64) {
    let (probe, mut at) = match family {
        ProbeFamilySpec::Product => (
            ProbeParams::Product { theta1: x[0], delta1: x[1], theta2: x[2], delta2: x[3] },
            4,
        ),
        ProbeFamilySpec::MaxEntangled => (
            ProbeParams::MaxEntangled { local_a: local_from(&x[0..3]), local_b: local_from(&x[3..6]) },
            6,
        ),
        ProbeFamilySpec::Partial { alpha } => (
            ProbeParams::Partial {
                alpha,
                local_a: local_from(&x[0..3]),
                local_b: local_from(&x[3..6]),
            },
            6,
        ),
    };
    let meas = if objective == Objective::MeasuredFi {
        match family {
            ProbeFamilySpec::Product => {
                let m = MeasurementParams::SingleQubit {
                    qubits: [
                        ProjectorAngles::new(x[at], x[at + 1]),
                        ProjectorAngles::new(x[at + 2], x[at + 3]),
                    ],
                };
                at += 4;
                Some(m)
            }
            _ => {
                let m = MeasurementParams::TwoQubit {
                    outer: [local_from(&x[at..at + 3]), local_from(&x[at + 3..at + 6])],
                    inner: [local_from(&x[at + 6..at + 9]), local_from(&x[at + 9..at + 12])],
                    core: [x[at + 12], x[at + 13], x[at + 14]],
                };
                at += 15;
                Some(m)
            }
        }
    } else {
        None
    };
    let t = fixed_t.unwrap_or_else(|| x[at]);
    (probe, meas, t)
}

// ---------------------------------------------------------------------------
// Evolution strategy
// ---------------------------------------------------------------------------

/// SplitMix64 step, used to derive independent sub-seeds.
pub(crate) fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Sorts indices by stochastic ranking: feasible pairs compare objectives;
/// when a pair contains an infeasible point, the objective still decides with
/// probability `pf`, otherwise the penalty does. Random draws happen lazily,
/// so fully feasible populations consume no randomness and sort by objective.
fn stochastic_rank(rng: &mut ChaCha8Rng, values: &[(f64, f64)], pf: f64) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..n {
        let mut swapped = false;
        for j in 0..n.saturating_sub(1) {
            let a = values[order[j]];
            let b = values[order[j + 1]];
            let both_feasible = a.1 == 0.0 && b.1 == 0.0;
            let by_objective = both_feasible || rng.gen::<f64>() < pf;
            let should_swap = if by_objective { a.0 > b.0 } else { a.1 > b.1 };
            if should_swap {
                order.swap(j, j + 1);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    order
}

struct Individual {
    x: Vec<f64>,
    sigma: Vec<f64>,
}

struct RunOutcome {
    best: Option<(f64, Vec<f64>, FisherResult)>,
    trace: Vec<f64>,
    evaluations: usize,
}

/// One restart of the evolution strategy.
fn sres_run<F>(
    lo: &[f64],
    hi: &[f64],
    evaluate: &F,
    budget: usize,
    rng: &mut ChaCha8Rng,
    incoming_best: f64,
) -> RunOutcome
where
    F: Fn(&[f64]) -> (f64, Option<FisherResult>) + Sync,
{
    let dims = lo.len();
    let tau = 1.0 / (2.0 * (dims as f64).sqrt()).sqrt();
    let tau_prime = 1.0 / (2.0 * dims as f64).sqrt();
    let range: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| h - l).collect();
    let sigma_init: Vec<f64> = range.iter().map(|r| r / (dims as f64).sqrt()).collect();

    let mut population: Vec<Individual> = (0..LAMBDA)
        .map(|_| Individual {
            x: (0..dims).map(|d| rng.gen_range(lo[d]..=hi[d])).collect(),
            sigma: sigma_init.clone(),
        })
        .collect();

    let generations = (budget / LAMBDA).max(1);
    let mut best: Option<(f64, Vec<f64>, FisherResult)> = None;
    let mut best_value = incoming_best;
    let mut trace = Vec::with_capacity(generations);
    let mut evaluations = 0;

    for _ in 0..generations {
        let scored: Vec<(f64, Option<FisherResult>)> =
            par_map(&population, |ind| evaluate(&ind.x));
        evaluations += population.len();
        for (ind, (value, detail)) in population.iter().zip(&scored) {
            if *value < best_value {
                if let Some(detail) = detail {
                    best_value = *value;
                    best = Some((*value, ind.x.clone(), *detail));
                }
            }
        }
        trace.push(best_value);

        // Penalties are zero by construction (resample-then-clamp keeps every
        // candidate in its box), listed anyway for the ranking contract.
        let ranked_values: Vec<(f64, f64)> = scored.iter().map(|(v, _)| (*v, 0.0)).collect();
        let order = stochastic_rank(rng, &ranked_values, RANK_PF);

        let mut offspring = Vec::with_capacity(LAMBDA);
        for k in 0..LAMBDA {
            let parent = &population[order[k % MU]];
            let global_draw: f64 = rng.sample(StandardNormal);
            let mut x = vec![0.0; dims];
            let mut sigma = vec![0.0; dims];
            for d in 0..dims {
                let local_draw: f64 = rng.sample(StandardNormal);
                let mut s = parent.sigma[d] * (tau_prime * global_draw + tau * local_draw).exp();
                s = s.clamp(SIGMA_FLOOR_FACTOR * range[d], range[d]);
                sigma[d] = s;
                let mut candidate = f64::NAN;
                for _ in 0..RESAMPLE_TRIES {
                    let step: f64 = rng.sample(StandardNormal);
                    candidate = parent.x[d] + s * step;
                    if (lo[d]..=hi[d]).contains(&candidate) {
                        break;
                    }
                }
                x[d] = candidate.clamp(lo[d], hi[d]);
            }
            offspring.push(Individual { x, sigma });
        }
        population = offspring;
    }

    RunOutcome { best, trace, evaluations }
}

fn validate_task(task: &OptimizationTask) -> Result<()> {
    task.config.validate()?;
    if task.budget < 400 {
        return Err(Error::InvalidConfig(format!(
            "budget = {} is too small; need at least 400 evaluations per restart",
            task.budget
        )));
    }
    if task.restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be at least 1".into()));
    }
    if let ProbeFamilySpec::Partial { alpha } = task.probe_family {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidConfig(format!("alpha = {alpha} outside [0, 1]")));
        }
    }
    Ok(())
}

fn evaluate_point(
    evaluator: &Evaluator,
    objective: Objective,
    probe: &ProbeParams,
    meas: Option<&MeasurementParams>,
    idx: usize,
) -> (f64, Option<FisherResult>) {
    let outcome = match objective {
        Objective::MeasuredFi => match meas {
            Some(m) => evaluator.measured(idx, probe, m),
            None => return (SENTINEL, None),
        },
        Objective::Qfi => evaluator.quantum(idx, probe),
    };
    match outcome {
        Ok(r) if !r.flagged && r.fi_single >= FI_FLOOR && r.bound.is_finite() => (r.bound, Some(r)),
        _ => (SENTINEL, None),
    }
}

/// Runs the full search: all restarts, free evolution time in [0.01, 2].
pub fn minimize(task: &OptimizationTask) -> Result<Optimum> {
    validate_task(task)?;
    let evaluator = Evaluator::lattice(&task.spec, &task.config, T_MAX)?;
    let (lo, hi) = boxes(task.probe_family, task.objective, true);
    let family = task.probe_family;
    let objective = task.objective;
    let eval = |x: &[f64]| {
        let (probe, meas, t) = decode(family, objective, x, None);
        let idx = evaluator.index_for(t);
        evaluate_point(&evaluator, objective, &probe, meas.as_ref(), idx)
    };

    let mut best: Option<(f64, Vec<f64>, FisherResult)> = None;
    let mut trace = Vec::new();
    let mut evaluations = 0;
    for restart in 0..task.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(task.rng_seed);
        rng.set_stream(restart as u64);
        let incoming = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        let outcome = sres_run(&lo, &hi, &eval, task.budget, &mut rng, incoming);
        evaluations += outcome.evaluations;
        trace.extend(outcome.trace);
        if let Some(candidate) = outcome.best {
            if best.as_ref().is_none_or(|b| candidate.0 < b.0) {
                best = Some(candidate);
            }
        }
    }

    let (bound, x, result) = best.ok_or(Error::Unestimable)?;
    let (probe, meas, _) = decode(family, objective, &x, None);
    Ok(Optimum {
        best_bound: bound,
        best_time: result.time,
        best_probe: probe,
        best_meas: meas,
        best_result: result,
        trace,
        evaluations_used: evaluations,
    })
}

/// Optimizes probe and measurement at one fixed, exactly integrated time.
fn minimize_at_fixed_time(
    evaluator: &Evaluator,
    family: ProbeFamilySpec,
    objective: Objective,
    idx: usize,
    budget: usize,
    restarts: usize,
    seed: u64,
) -> Result<(f64, FisherResult)> {
    let (lo, hi) = boxes(family, objective, false);
    let t = evaluator.time_at(idx);
    let eval = |x: &[f64]| {
        let (probe, meas, _) = decode(family, objective, x, Some(t));
        evaluate_point(evaluator, objective, &probe, meas.as_ref(), idx)
    };
    let mut best: Option<(f64, Vec<f64>, FisherResult)> = None;
    for restart in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let incoming = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        let outcome = sres_run(&lo, &hi, &eval, budget, &mut rng, incoming);
        if let Some(candidate) = outcome.best {
            if best.as_ref().is_none_or(|b| candidate.0 < b.0) {
                best = Some(candidate);
            }
        }
    }
    let (bound, _, result) = best.ok_or(Error::Unestimable)?;
    Ok((bound, result))
}

/// Sweeps the evolution time over `grid`, optimizing the separable and the
/// maximally entangled arrangement independently at every grid time.
pub fn scan_time(task: &OptimizationTask, grid: &[f64]) -> Result<Vec<TimeScanPoint>> {
    validate_task(task)?;
    if grid.is_empty() {
        return Err(Error::InvalidSpec("time grid is empty".into()));
    }
    let product_eval = Evaluator::with_times(&task.spec, &task.config, grid)?;
    let entangled_eval = Evaluator::with_times(&task.spec, &task.config, grid)?;
    let indices: Vec<usize> = (1..=grid.len()).collect();
    let points = par_map(&indices, |&idx| -> Result<TimeScanPoint> {
        let seed_p = splitmix64(task.rng_seed ^ (2 * idx as u64));
        let seed_e = splitmix64(task.rng_seed ^ (2 * idx as u64 + 1));
        let (bound_product, _) = minimize_at_fixed_time(
            &product_eval,
            ProbeFamilySpec::Product,
            task.objective,
            idx,
            task.budget,
            task.restarts,
            seed_p,
        )?;
        let (bound_entangled, _) = minimize_at_fixed_time(
            &entangled_eval,
            ProbeFamilySpec::MaxEntangled,
            task.objective,
            idx,
            task.budget,
            task.restarts,
            seed_e,
        )?;
        Ok(TimeScanPoint { t: product_eval.time_at(idx), bound_product, bound_entangled })
    });
    points.into_iter().collect()
}

/// Sweeps the Schmidt weight of the partially entangled probe family,
/// running a full search (free time) at every weight.
pub fn scan_alpha(task: &OptimizationTask, alphas: &[f64]) -> Result<Vec<AlphaScanPoint>> {
    validate_task(task)?;
    if alphas.is_empty() {
        return Err(Error::InvalidSpec("alpha grid is empty".into()));
    }
    for &alpha in alphas {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidConfig(format!("alpha = {alpha} outside [0, 1]")));
        }
    }
    let entries: Vec<(usize, f64)> = alphas.iter().copied().enumerate().collect();
    let points = par_map(&entries, |&(k, alpha)| -> Result<AlphaScanPoint> {
        let sub = OptimizationTask {
            probe_family: ProbeFamilySpec::Partial { alpha },
            rng_seed: splitmix64(task.rng_seed ^ k as u64),
            ..*task
        };
        let optimum = minimize(&sub)?;
        Ok(AlphaScanPoint {
            alpha,
            concurrence: optimum.best_probe.concurrence()?,
            bound: optimum.best_bound,
            best_time: optimum.best_time,
        })
    });
    points.into_iter().collect()
}
