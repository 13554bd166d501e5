//! Closed-form reference bounds for frequency estimation under an Ising
//! coupling and local dephasing.
//!
//! Four benchmark arrangements admit explicit bound-versus-time curves:
//!
//! * `NoiselessProduct` - one equatorial qubit per pair, partner parked at a
//!   pole so the zz coupling drops out: information t^2 per pair and
//!   `delta = 1 / sqrt((n/N) T t)`.
//! * `NoiselessEntangled` - a maximally entangled pair, coupling-immune with
//!   information 4 t^2: `delta = 1 / (2 sqrt((n/N) T t))`.
//! * `NoisyProduct` - both qubits equatorial with quadrature readout: each
//!   qubit keeps information t^2 e^{-2 gamma t} cos^2(2 J t), whence
//!   `delta = e^{gamma t} / (sqrt(2 (n/N) T t) |cos(2 J t)|)`, diverging
//!   where the coupling echoes the coherence away.
//! * `NoisyEntangled` - the maximally entangled pair decoheres twice as fast
//!   but stays coupling-immune: `delta = e^{2 gamma t} / (2 sqrt((n/N) T t))`.
//!
//! The optimal-time solver locates the minimum of each curve on (0, 2]; for
//! the noisy separable curve the stationarity condition
//! `gamma + 2 J tan(2 J t) - 1/(2 t) = 0` is strictly increasing between
//! consecutive poles of the tangent, so bisection per branch finds every
//! interior candidate.

use crate::error::{Error, Result};
use crate::optimize::T_MAX;

/// Curve selector for the closed-form bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    NoiselessProduct,
    NoiselessEntangled,
    NoisyProduct,
    NoisyEntangled,
}

impl Scenario {
    pub fn label(&self) -> &'static str {
        match self {
            Scenario::NoiselessProduct => "noiseless-product",
            Scenario::NoiselessEntangled => "noiseless-entangled",
            Scenario::NoisyProduct => "noisy-product",
            Scenario::NoisyEntangled => "noisy-entangled",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "noiseless-product" => Ok(Scenario::NoiselessProduct),
            "noiseless-entangled" => Ok(Scenario::NoiselessEntangled),
            "noisy-product" => Ok(Scenario::NoisyProduct),
            "noisy-entangled" => Ok(Scenario::NoisyEntangled),
            other => Err(Error::InvalidConfig(format!(
                "unknown scenario '{other}' (expected noiseless-product|noiseless-entangled|noisy-product|noisy-entangled)"
            ))),
        }
    }
}

/// Inputs of a closed-form curve.
#[derive(Clone, Copy, Debug)]
pub struct ClosedFormCase {
    pub scenario: Scenario,
    pub n_qubits: usize,
    pub cluster: usize,
    pub t_total: f64,
    pub gamma: f64,
    pub coupling_j: f64,
}

impl Default for ClosedFormCase {
    fn default() -> Self {
        ClosedFormCase {
            scenario: Scenario::NoisyProduct,
            n_qubits: 2,
            cluster: 2,
            t_total: 2.0,
            gamma: 0.5,
            coupling_j: 0.5,
        }
    }
}

/// Coherence magnitude below which the noisy separable curve is treated as
/// divergent.
const COS_FLOOR: f64 = 1e-12;
const BISECTION_ITERS: usize = 100;
const POLE_OFFSET: f64 = 1e-9;

impl ClosedFormCase {
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
        if !self.coupling_j.is_finite() {
            return Err(Error::InvalidConfig("coupling_j must be finite".into()));
        }
        Ok(())
    }

    /// (n_qubits / cluster) * t_total * t, the repetition-weighted time.
    fn weighted_time(&self, t: f64) -> f64 {
        (self.n_qubits as f64 / self.cluster as f64) * self.t_total * t
    }
}

/// Evaluates the closed-form uncertainty bound at evolution time `t`.
pub fn closed_form_bound(case: &ClosedFormCase, t: f64) -> Result<f64> {
    case.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidSpec(format!("t = {t} must be finite and positive")));
    }
    let base = case.weighted_time(t);
    match case.scenario {
        Scenario::NoiselessProduct => Ok(1.0 / base.sqrt()),
        Scenario::NoiselessEntangled => Ok(0.5 / base.sqrt()),
        Scenario::NoisyProduct => {
            let coherence = (2.0 * case.coupling_j * t).cos().abs();
            if coherence < COS_FLOOR {
                return Err(Error::Divergence(format!(
                    "separable coherence vanishes at t = {t} for coupling {}",
                    case.coupling_j
                )));
            }
            Ok((case.gamma * t).exp() / ((2.0 * base).sqrt() * coherence))
        }
        Scenario::NoisyEntangled => Ok((2.0 * case.gamma * t).exp() * 0.5 / base.sqrt()),
    }
}

/// Stationarity condition of the noisy separable curve: its log-derivative
/// gamma + 2 J tan(2 J t) - 1/(2 t), strictly increasing between tangent
/// poles.
fn log_derivative(gamma: f64, j: f64, t: f64) -> f64 {
    gamma + 2.0 * j * (2.0 * j * t).tan() - 0.5 / t
}

fn bisect_root(gamma: f64, j: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if log_derivative(gamma, j, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimizes the case's bound over evolution times (0, 2], returning the
/// optimal time and the bound there.
pub fn optimal_time(case: &ClosedFormCase) -> Result<(f64, f64)> {
    case.validate()?;
    match case.scenario {
        // Monotonically tightening curves peak at the time-box edge.
        Scenario::NoiselessProduct | Scenario::NoiselessEntangled => {
            Ok((T_MAX, closed_form_bound(case, T_MAX)?))
        }
        Scenario::NoisyEntangled => {
            let t_opt = if case.gamma == 0.0 { T_MAX } else { (0.25 / case.gamma).min(T_MAX) };
            Ok((t_opt, closed_form_bound(case, t_opt)?))
        }
        Scenario::NoisyProduct => {
            let j = case.coupling_j.abs();
            let mut candidates: Vec<f64> = Vec::new();
            if j == 0.0 {
                if case.gamma > 0.0 {
                    candidates.push((0.5 / case.gamma).min(T_MAX));
                }
                candidates.push(T_MAX);
            } else {
                // Tangent poles split (0, 2] into branches; the condition
                // rises from -inf on each, so each holds at most one root.
                let pole_spacing = std::f64::consts::PI / (2.0 * j);
                let first_pole = 0.5 * pole_spacing;
                let mut branch_lo = 0.0;
                let mut pole = first_pole;
                loop {
                    let branch_hi = pole.min(T_MAX);
                    let lo = branch_lo + POLE_OFFSET;
                    let hi = branch_hi - POLE_OFFSET;
                    if lo < hi {
                        if log_derivative(case.gamma, j, hi) >= 0.0 {
                            if log_derivative(case.gamma, j, lo) <= 0.0 {
                                candidates.push(bisect_root(case.gamma, j, lo, hi));
                            } else {
                                // Rising from the branch start: edge minimum.
                                candidates.push(lo);
                            }
                        } else {
                            // Still falling at the branch end (only possible
                            // when the time box truncates the branch).
                            candidates.push(hi);
                        }
                    }
                    if pole >= T_MAX {
                        break;
                    }
                    branch_lo = pole;
                    pole += pole_spacing;
                }
                candidates.push(T_MAX);
            }
            let mut best: Option<(f64, f64)> = None;
            for t in candidates {
                if let Ok(bound) = closed_form_bound(case, t) {
                    if best.is_none_or(|(_, b)| bound < b) {
                        best = Some((t, bound));
                    }
                }
            }
            best.ok_or_else(|| {
                Error::Divergence("no finite bound on the whole time box".into())
            })
        }
    }
}

/// One entry of the coupling sweep.
#[derive(Clone, Copy, Debug)]
pub struct CouplingScanPoint {
    pub coupling_j: f64,
    pub t_opt: f64,
    pub bound: f64,
}

/// Minimizes the case's curve for each coupling value in turn.
pub fn sweep_coupling(case: &ClosedFormCase, j_values: &[f64]) -> Result<Vec<CouplingScanPoint>> {
    case.validate()?;
    if j_values.is_empty() {
        return Err(Error::InvalidSpec("coupling grid is empty".into()));
    }
    let mut points = Vec::with_capacity(j_values.len());
    for &j in j_values {
        if !j.is_finite() {
            return Err(Error::InvalidConfig("coupling grid entries must be finite".into()));
        }
        let sub = ClosedFormCase { coupling_j: j, ..*case };
        let (t_opt, bound) = optimal_time(&sub)?;
        points.push(CouplingScanPoint { coupling_j: j, t_opt, bound });
    }
    Ok(points)
}
