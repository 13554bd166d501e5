//! Fisher information and uncertainty bounds.
//!
//! A run interrogates `n_qubits` qubits grouped into clusters of `cluster`
//! qubits for a total time budget `t_total`; evolving each cluster for a time
//! `t` permits `nu = (n_qubits / cluster) * (t_total / t)` independent
//! repetitions, and an (unbiased) estimate of the Hamiltonian parameter obeys
//!
//! ```text
//! delta >= 1 / sqrt(nu * F)
//! ```
//!
//! with `F` the Fisher information of a single repetition. For projective
//! binary readout `F` is the classical Fisher information of the outcome
//! probability; maximized over all measurements it becomes the quantum Fisher
//! information of the evolved state, computed here from the symmetric
//! logarithmic derivative. Separable probes read each qubit independently, so
//! their information is the sum of the per-qubit terms.

use crate::dynamics::{evolve_with_sensitivity, DensityMatrix, EvolutionProblem, PropagatorTable};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, partial_trace, ComplexMatrix, KeepQubit};
use crate::model::{HamiltonianSpec, MeasurementParams, MeasurementVector, ProbeFamily, ProbeParams};

/// Eigenvalue-pair support threshold for the logarithmic-derivative sum.
pub const SLD_SUPPORT_TOL: f64 = 1e-10;
/// Variance floor below which a binary outcome is treated as deterministic.
///
/// Near-dark outcomes put the probability in the denominator of the Fisher
/// information, so the relative error of an integrated probability of order
/// 1e-9 makes the quotient meaningless long before the probability itself
/// underflows. <= 1e-7 keeps the quotient's own relative error below a
/// percent for the integrator's absolute accuracy.
pub const PROBABILITY_VARIANCE_FLOOR: f64 = 1e-7;

/// Resource bookkeeping for one experimental run.
#[derive(Clone, Copy, Debug)]
pub struct ExperimentConfig {
    /// Total number of qubits interrogated in parallel.
    pub n_qubits: usize,
    /// Qubits per jointly prepared cluster.
    pub cluster: usize,
    /// Total interrogation time budget per qubit.
    pub t_total: f64,
    /// Dephasing rate.
    pub gamma: f64,
    /// Runge-Kutta steps per unit time.
    pub steps_per_unit: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig { n_qubits: 2, cluster: 2, t_total: 2.0, gamma: 0.5, steps_per_unit: 1000 }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.cluster == 0 || !self.n_qubits.is_multiple_of(self.cluster) {
            return Err(Error::InvalidConfig(format!(
                "need cluster (got {}) dividing n_qubits (got {})",
                self.cluster, self.n_qubits
            )));
        }
        if !(self.t_total.is_finite() && self.t_total > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "t_total = {} must be finite and positive",
                self.t_total
            )));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma = {} must be finite and nonnegative",
                self.gamma
            )));
        }
        if self.steps_per_unit == 0 {
            return Err(Error::InvalidConfig("steps_per_unit must be at least 1".into()));
        }
        Ok(())
    }

    /// Repetition count nu = (n_qubits / cluster) * (t_total / t).
    pub fn repetitions(&self, t: f64) -> f64 {
        (self.n_qubits as f64 / self.cluster as f64) * (self.t_total / t)
    }
}

/// Outcome of one Fisher-information evaluation.
#[derive(Clone, Copy, Debug)]
pub struct FisherResult {
    /// Fisher information of a single cluster interrogation.
    pub fi_single: f64,
    /// Number of independent repetitions in the time budget.
    pub nu: f64,
    /// Uncertainty lower bound 1 / sqrt(nu * fi_single).
    pub bound: f64,
    /// Evolution time of the evaluation.
    pub time: f64,
    /// Joint-projector click probability, when one exists.
    pub probability: Option<f64>,
    /// True when an outcome probability sat on the deterministic floor, making
    /// the information estimate numerically unreliable.
    pub flagged: bool,
}

/// Classical Fisher information dp^2 / (p (1 - p)) of a binary outcome,
/// flagging (and flooring) near-deterministic probabilities.
pub fn bernoulli_fi(p: f64, dp: f64) -> Result<(f64, bool)> {
    if !p.is_finite() || !(-1e-10..=1.0 + 1e-10).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if !dp.is_finite() {
        return Err(Error::InvalidProbability(dp));
    }
    let p = p.clamp(0.0, 1.0);
    let variance = p * (1.0 - p);
    if variance < PROBABILITY_VARIANCE_FLOOR {
        Ok((dp * dp / PROBABILITY_VARIANCE_FLOOR, true))
    } else {
        Ok((dp * dp / variance, false))
    }
}

/// Quantum Fisher information via the symmetric logarithmic derivative:
/// F = sum over eigenpairs with lambda_i + lambda_j > 1e-10 of
/// 2 |<e_i| d rho |e_j>|^2 / (lambda_i + lambda_j).
pub fn sld_qfi(rho: &ComplexMatrix, drho: &ComplexMatrix) -> Result<f64> {
    if rho.dim() != drho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: drho.dim() });
    }
    let (eigs, vecs) = hermitian_eig(&rho.hermitized())?;
    let in_basis = vecs.adjoint().mul(&drho.hermitized()).mul(&vecs);
    let dim = rho.dim();
    let mut total = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let denom = eigs[i] + eigs[j];
            if denom > SLD_SUPPORT_TOL {
                total += 2.0 * in_basis.at(i, j).norm_sqr() / denom;
            }
        }
    }
    Ok(total)
}

/// Converts single-cluster Fisher information into the uncertainty bound.
pub fn uncertainty_bound(fi_single: f64, config: &ExperimentConfig, t: f64) -> Result<(f64, f64)> {
    config.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidSpec(format!("t = {t} must be finite and positive")));
    }
    if !fi_single.is_finite() || fi_single < 0.0 {
        return Err(Error::InvalidSpec(format!("Fisher information {fi_single} is not usable")));
    }
    if fi_single == 0.0 {
        return Err(Error::Unestimable);
    }
    let nu = config.repetitions(t);
    Ok((nu, 1.0 / (nu * fi_single).sqrt()))
}

/// Classical Fisher information of the chosen readout applied to an evolved
/// state and its parameter sensitivity. Per-qubit readout sums the marginal
/// informations; a joint projector yields the binary-outcome information.
fn classical_fi_from_state(
    rho: &ComplexMatrix,
    sens: &ComplexMatrix,
    meas: &MeasurementVector,
) -> Result<(f64, bool, Option<f64>)> {
    match meas {
        MeasurementVector::PerQubit(projectors) => {
            let mut fi = 0.0;
            let mut flagged = false;
            for (keep, proj) in [KeepQubit::First, KeepQubit::Second].iter().zip(projectors) {
                let marginal = partial_trace(rho, *keep)?;
                let marginal_sens = partial_trace(sens, *keep)?;
                let p = proj.expectation(&marginal).re;
                let dp = proj.expectation(&marginal_sens).re;
                let (f, fl) = bernoulli_fi(p, dp)?;
                fi += f;
                flagged |= fl;
            }
            Ok((fi, flagged, None))
        }
        MeasurementVector::Joint(projector) => {
            let p = projector.expectation(rho).re;
            let dp = projector.expectation(sens).re;
            let (fi, flagged) = bernoulli_fi(p, dp)?;
            Ok((fi, flagged, Some(p)))
        }
    }
}

/// Quantum Fisher information of the evolved state; separable probes use the
/// sum of the marginal informations, entangled probes the joint state.
fn quantum_fi_from_state(
    rho: &ComplexMatrix,
    sens: &ComplexMatrix,
    family: ProbeFamily,
) -> Result<f64> {
    if family == ProbeFamily::Product {
        let mut fi = 0.0;
        for keep in [KeepQubit::First, KeepQubit::Second] {
            let marginal = partial_trace(rho, keep)?;
            let marginal_sens = partial_trace(sens, keep)?;
            fi += sld_qfi(&marginal, &marginal_sens)?;
        }
        Ok(fi)
    } else {
        sld_qfi(rho, sens)
    }
}

fn package(
    fi: f64,
    flagged: bool,
    probability: Option<f64>,
    config: &ExperimentConfig,
    t: f64,
) -> Result<FisherResult> {
    let (nu, bound) = uncertainty_bound(fi, config, t)?;
    Ok(FisherResult { fi_single: fi, nu, bound, time: t, probability, flagged })
}

/// Evaluates probe/measurement pairs against one Hamiltonian on precomputed
/// propagator maps, so that each evaluation costs two small mat-vec products.
pub struct Evaluator {
    table: PropagatorTable,
    config: ExperimentConfig,
}

impl Evaluator {
    /// Uniform time lattice with spacing 1 / steps_per_unit up to `t_max`.
    pub fn lattice(spec: &HamiltonianSpec, config: &ExperimentConfig, t_max: f64) -> Result<Self> {
        config.validate()?;
        let dt = 1.0 / config.steps_per_unit as f64;
        let table = PropagatorTable::lattice(
            &spec.hamiltonian(),
            config.gamma,
            &spec.parameter_generator(),
            t_max,
            dt,
        )?;
        Ok(Evaluator { table, config: *config })
    }

    /// Exact evaluation times, each reached by segment-wise integration.
    pub fn with_times(spec: &HamiltonianSpec, config: &ExperimentConfig, times: &[f64]) -> Result<Self> {
        config.validate()?;
        let table = PropagatorTable::for_times(
            &spec.hamiltonian(),
            config.gamma,
            &spec.parameter_generator(),
            times,
            config.steps_per_unit,
        )?;
        Ok(Evaluator { table, config: *config })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn index_for(&self, t: f64) -> usize {
        self.table.index_for(t)
    }

    pub fn time_at(&self, idx: usize) -> f64 {
        self.table.time_at(idx)
    }

    fn evolved(&self, idx: usize, probe: &ProbeParams) -> Result<(ComplexMatrix, ComplexMatrix, f64)> {
        if idx == 0 || idx > self.table.len() {
            return Err(Error::InvalidSpec(format!(
                "time index {idx} outside the stored range 1..={}",
                self.table.len()
            )));
        }
        let rho0 = DensityMatrix::from_pure(&probe.state_vector()?)?;
        let (rho, sens) = self.table.apply(idx, rho0.matrix());
        Ok((rho.hermitized(), sens.hermitized(), self.table.time_at(idx)))
    }

    /// Classical-readout bound at a stored time index.
    pub fn measured(
        &self,
        idx: usize,
        probe: &ProbeParams,
        meas: &MeasurementParams,
    ) -> Result<FisherResult> {
        let built = meas.build()?;
        let (rho, sens, t) = self.evolved(idx, probe)?;
        let (fi, flagged, probability) = classical_fi_from_state(&rho, &sens, &built)?;
        package(fi, flagged, probability, &self.config, t)
    }

    /// Measurement-optimized (quantum Fisher information) bound.
    pub fn quantum(&self, idx: usize, probe: &ProbeParams) -> Result<FisherResult> {
        let (rho, sens, t) = self.evolved(idx, probe)?;
        let fi = quantum_fi_from_state(&rho, &sens, probe.family())?;
        package(fi, false, None, &self.config, t)
    }
}

fn direct_state(
    spec: &HamiltonianSpec,
    config: &ExperimentConfig,
    probe: &ProbeParams,
    t: f64,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    config.validate()?;
    let steps = ((t * config.steps_per_unit as f64).ceil() as usize).max(1);
    let problem = EvolutionProblem {
        hamiltonian: spec.hamiltonian(),
        gamma: config.gamma,
        initial: DensityMatrix::from_pure(&probe.state_vector()?)?,
        t_end: t,
        steps,
    };
    let (rho, sens) = evolve_with_sensitivity(&problem, &spec.parameter_generator())?;
    Ok((*rho.matrix(), sens))
}

/// Table-free counterpart of [`Evaluator::measured`] that integrates from
/// scratch; used for cross-validation and one-off evaluations.
pub fn measured_direct(
    spec: &HamiltonianSpec,
    config: &ExperimentConfig,
    probe: &ProbeParams,
    meas: &MeasurementParams,
    t: f64,
) -> Result<FisherResult> {
    let built = meas.build()?;
    let (rho, sens) = direct_state(spec, config, probe, t)?;
    let (fi, flagged, probability) = classical_fi_from_state(&rho, &sens, &built)?;
    package(fi, flagged, probability, config, t)
}

/// Table-free counterpart of [`Evaluator::quantum`].
pub fn quantum_direct(
    spec: &HamiltonianSpec,
    config: &ExperimentConfig,
    probe: &ProbeParams,
    t: f64,
) -> Result<FisherResult> {
    let (rho, sens) = direct_state(spec, config, probe, t)?;
    let fi = quantum_fi_from_state(&rho, &sens, probe.family())?;
    package(fi, false, None, config, t)
}
