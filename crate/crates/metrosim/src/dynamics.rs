//! Open-system evolution under a Hamiltonian with independent dephasing on
//! each qubit.
//!
//! The master equation is
//!
//! ```text
//! d(rho)/dt = -i [H, rho] + (gamma/2) sum_k (Z_k rho Z_k - rho)
//! ```
//!
//! whose dissipator acts elementwise: the (i, j) matrix element decays at
//! rate gamma times the number of bit positions where i and j differ. The
//! integrator is a classical fixed-step fourth-order Runge-Kutta scheme; a
//! step-doubled variant cross-checks the step count, and a propagator table
//! precomputes the (linear) state-plus-sensitivity map on a time lattice so
//! that optimizer evaluations reduce to two 16x16 mat-vec products.

use crate::error::{Error, Result};
use crate::linalg::{c64, commutator, hermitian_eig, ComplexMatrix, ComplexVector, C64};

/// Tolerance for Hermiticity and unit-trace checks on density matrices.
pub const STATE_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated (and clamped to zero) on a state.
/// Positivity is not a linear invariant of the integrator, so fourth-order
/// truncation error can push an eigenvalue a few parts in 1e7 below zero
/// over thousands of steps at the fastest level splittings handled here.
pub const EIGENVALUE_FLOOR: f64 = -1e-6;

/// A validated density matrix: Hermitian, unit trace, positive semidefinite
/// within tolerance.
#[derive(Clone, Copy, Debug)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-10), unit trace (1e-10) and eigenvalues no
    /// lower than [`EIGENVALUE_FLOOR`]; eigenvalues in [floor, 0) are clamped
    /// to zero and the spectrum renormalized.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        let asym = mat.hermitian_asymmetry();
        if asym > STATE_TOL {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "trace = {} + {}i, expected 1",
                tr.re, tr.im
            )));
        }
        let sym = mat.hermitized();
        let (mut eigs, vecs) = hermitian_eig(&sym)?;
        for lam in &mut eigs {
            if *lam < EIGENVALUE_FLOOR {
                return Err(Error::InvalidState(format!(
                    "eigenvalue {lam} below the positivity floor"
                )));
            }
            if *lam < 0.0 {
                *lam = 0.0;
            }
        }
        let total: f64 = eigs.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidState("all eigenvalues vanish".into()));
        }
        let dim = sym.dim();
        let mut rebuilt = ComplexMatrix::zeros(dim);
        for (k, lam) in eigs.iter().enumerate() {
            let w = lam / total;
            for i in 0..dim {
                for j in 0..dim {
                    let term = vecs.at(i, k) * vecs.at(j, k).conj() * w;
                    rebuilt.set(i, j, rebuilt.at(i, j) + term);
                }
            }
        }
        Ok(DensityMatrix { mat: rebuilt })
    }

    /// |v><v| for a normalized pure state.
    pub fn from_pure(v: &ComplexVector) -> Result<Self> {
        let n = v.norm();
        if (n - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "pure state has norm {n}, expected 1"
            )));
        }
        DensityMatrix::new(v.outer())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }
}

/// One evolution instance: Hamiltonian, dephasing rate, initial state, final
/// time and Runge-Kutta step count.
#[derive(Clone, Copy, Debug)]
pub struct EvolutionProblem {
    pub hamiltonian: ComplexMatrix,
    pub gamma: f64,
    pub initial: DensityMatrix,
    pub t_end: f64,
    pub steps: usize,
}

impl EvolutionProblem {
    pub fn validate(&self) -> Result<()> {
        let asym = self.hamiltonian.hermitian_asymmetry();
        if asym > STATE_TOL {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        if self.hamiltonian.dim() != self.initial.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.hamiltonian.dim(),
                got: self.initial.dim(),
            });
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "gamma = {} must be finite and nonnegative",
                self.gamma
            )));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "t_end = {} must be finite and positive",
                self.t_end
            )));
        }
        if self.steps == 0 {
            return Err(Error::StepCount("steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Right-hand side -i[H, rho] - gamma * (differing bits) .* rho.
pub fn lindblad_rhs(hamiltonian: &ComplexMatrix, gamma: f64, rho: &ComplexMatrix) -> ComplexMatrix {
    let mut out = commutator(hamiltonian, rho).scale(c64(0.0, -1.0));
    let dim = rho.dim();
    for i in 0..dim {
        for j in 0..dim {
            let weight = (i ^ j).count_ones() as f64;
            if weight > 0.0 {
                out.set(i, j, out.at(i, j) - rho.at(i, j) * (gamma * weight));
            }
        }
    }
    out
}

fn rk4_step(hamiltonian: &ComplexMatrix, gamma: f64, rho: &ComplexMatrix, h: f64) -> ComplexMatrix {
    let k1 = lindblad_rhs(hamiltonian, gamma, rho);
    let mut y = *rho;
    y.add_scaled(&k1, h / 2.0);
    let k2 = lindblad_rhs(hamiltonian, gamma, &y);
    y = *rho;
    y.add_scaled(&k2, h / 2.0);
    let k3 = lindblad_rhs(hamiltonian, gamma, &y);
    y = *rho;
    y.add_scaled(&k3, h);
    let k4 = lindblad_rhs(hamiltonian, gamma, &y);
    let mut out = *rho;
    out.add_scaled(&k1, h / 6.0);
    out.add_scaled(&k2, h / 3.0);
    out.add_scaled(&k3, h / 3.0);
    out.add_scaled(&k4, h / 6.0);
    out
}

fn joint_rhs(
    hamiltonian: &ComplexMatrix,
    gamma: f64,
    generator: &ComplexMatrix,
    rho: &ComplexMatrix,
    sens: &ComplexMatrix,
) -> (ComplexMatrix, ComplexMatrix) {
    let drho = lindblad_rhs(hamiltonian, gamma, rho);
    let mut dsens = lindblad_rhs(hamiltonian, gamma, sens);
    let injection = commutator(generator, rho).scale(c64(0.0, -1.0));
    dsens = dsens.add(&injection);
    (drho, dsens)
}

fn rk4_joint_step(
    hamiltonian: &ComplexMatrix,
    gamma: f64,
    generator: &ComplexMatrix,
    rho: &ComplexMatrix,
    sens: &ComplexMatrix,
    h: f64,
) -> (ComplexMatrix, ComplexMatrix) {
    let (k1r, k1s) = joint_rhs(hamiltonian, gamma, generator, rho, sens);
    let mut yr = *rho;
    let mut ys = *sens;
    yr.add_scaled(&k1r, h / 2.0);
    ys.add_scaled(&k1s, h / 2.0);
    let (k2r, k2s) = joint_rhs(hamiltonian, gamma, generator, &yr, &ys);
    yr = *rho;
    ys = *sens;
    yr.add_scaled(&k2r, h / 2.0);
    ys.add_scaled(&k2s, h / 2.0);
    let (k3r, k3s) = joint_rhs(hamiltonian, gamma, generator, &yr, &ys);
    yr = *rho;
    ys = *sens;
    yr.add_scaled(&k3r, h);
    ys.add_scaled(&k3s, h);
    let (k4r, k4s) = joint_rhs(hamiltonian, gamma, generator, &yr, &ys);
    let mut out_r = *rho;
    let mut out_s = *sens;
    out_r.add_scaled(&k1r, h / 6.0);
    out_r.add_scaled(&k2r, h / 3.0);
    out_r.add_scaled(&k3r, h / 3.0);
    out_r.add_scaled(&k4r, h / 6.0);
    out_s.add_scaled(&k1s, h / 6.0);
    out_s.add_scaled(&k2s, h / 3.0);
    out_s.add_scaled(&k3s, h / 3.0);
    out_s.add_scaled(&k4s, h / 6.0);
    (out_r, out_s)
}

fn integrate_raw(problem: &EvolutionProblem, steps: usize) -> ComplexMatrix {
    let h = problem.t_end / steps as f64;
    let mut rho = *problem.initial.matrix();
    for _ in 0..steps {
        rho = rk4_step(&problem.hamiltonian, problem.gamma, &rho, h);
    }
    rho
}

/// Evolves the state to `t_end` and returns the cleaned-up density matrix.
pub fn evolve(problem: &EvolutionProblem) -> Result<DensityMatrix> {
    problem.validate()?;
    let raw = integrate_raw(problem, problem.steps);
    if !raw.is_finite() {
        return Err(Error::Divergence("evolution produced non-finite entries".into()));
    }
    DensityMatrix::new(raw.hermitized())
}

/// Like [`evolve`], but re-integrates with doubled step count and rejects the
/// result unless the two runs agree to 1e-9 elementwise.
pub fn evolve_verified(problem: &EvolutionProblem) -> Result<DensityMatrix> {
    problem.validate()?;
    let coarse = integrate_raw(problem, problem.steps);
    let fine = integrate_raw(problem, problem.steps * 2);
    if !fine.is_finite() {
        return Err(Error::Divergence("evolution produced non-finite entries".into()));
    }
    let diff = coarse.max_abs_diff(&fine);
    if diff.is_nan() || diff > 1e-9 {
        return Err(Error::StepCount(format!(
            "step-doubling residual {diff:.3e} exceeds 1e-9 with {} steps over t = {}; \
             increase the step count",
            problem.steps, problem.t_end
        )));
    }
    DensityMatrix::new(fine.hermitized())
}

/// Evolves the state together with its parameter sensitivity d(rho)/d(theta),
/// where `generator` is dH/d(theta) and the sensitivity starts at zero.
pub fn evolve_with_sensitivity(
    problem: &EvolutionProblem,
    generator: &ComplexMatrix,
) -> Result<(DensityMatrix, ComplexMatrix)> {
    problem.validate()?;
    if generator.dim() != problem.hamiltonian.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.hamiltonian.dim(),
            got: generator.dim(),
        });
    }
    let h = problem.t_end / problem.steps as f64;
    let mut rho = *problem.initial.matrix();
    let mut sens = ComplexMatrix::zeros(rho.dim());
    for _ in 0..problem.steps {
        let (r, s) = rk4_joint_step(&problem.hamiltonian, problem.gamma, generator, &rho, &sens, h);
        rho = r;
        sens = s;
    }
    if !rho.is_finite() || !sens.is_finite() {
        return Err(Error::Divergence("evolution produced non-finite entries".into()));
    }
    Ok((DensityMatrix::new(rho.hermitized())?, sens.hermitized()))
}

// ---------------------------------------------------------------------------
// Propagator table
// ---------------------------------------------------------------------------

const VEC_LEN: usize = 16;
const MAP_LEN: usize = VEC_LEN * VEC_LEN;

/// Cumulative linear maps at one stored time: `phi` sends vec(rho_0) to
/// vec(rho(t)), `sens` sends vec(rho_0) to vec(d rho(t) / d theta).
#[derive(Clone)]
struct CumulativeMaps {
    phi: Box<[C64; MAP_LEN]>,
    sens: Box<[C64; MAP_LEN]>,
}

/// Precomputed evolution maps for a fixed (Hamiltonian, gamma, generator)
/// triple on a set of times.
///
/// The state-plus-sensitivity pair obeys a linear, time-independent equation,
/// so the flow over any interval is a block-triangular linear map with equal
/// diagonal blocks. The table composes one-step Runge-Kutta maps and stores
/// the cumulative blocks, after which evaluating any stored time for any
/// initial state costs two 16x16 mat-vec products instead of a fresh
/// integration.
pub struct PropagatorTable {
    times: Vec<f64>,
    maps: Vec<CumulativeMaps>,
    lattice_dt: Option<f64>,
}

fn vectorize(m: &ComplexMatrix) -> [C64; VEC_LEN] {
    let mut v = [c64(0.0, 0.0); VEC_LEN];
    for r in 0..4 {
        for c in 0..4 {
            v[4 * r + c] = m.at(r, c);
        }
    }
    v
}

fn matricize(v: &[C64; VEC_LEN]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4);
    for r in 0..4 {
        for c in 0..4 {
            m.set(r, c, v[4 * r + c]);
        }
    }
    m
}

fn map_mul(a: &[C64; MAP_LEN], b: &[C64; MAP_LEN]) -> Box<[C64; MAP_LEN]> {
    let mut out = Box::new([c64(0.0, 0.0); MAP_LEN]);
    for i in 0..VEC_LEN {
        for k in 0..VEC_LEN {
            let aik = a[VEC_LEN * i + k];
            if aik.re == 0.0 && aik.im == 0.0 {
                continue;
            }
            for j in 0..VEC_LEN {
                out[VEC_LEN * i + j] += aik * b[VEC_LEN * k + j];
            }
        }
    }
    out
}

fn map_add(a: &mut [C64; MAP_LEN], b: &[C64; MAP_LEN]) {
    for (x, y) in a.iter_mut().zip(b.iter()) {
        *x += *y;
    }
}

fn map_vec(m: &[C64; MAP_LEN], v: &[C64; VEC_LEN]) -> [C64; VEC_LEN] {
    let mut out = [c64(0.0, 0.0); VEC_LEN];
    for i in 0..VEC_LEN {
        let mut acc = c64(0.0, 0.0);
        let row = &m[VEC_LEN * i..VEC_LEN * (i + 1)];
        for j in 0..VEC_LEN {
            acc += row[j] * v[j];
        }
        out[i] = acc;
    }
    out
}

fn identity_map() -> Box<[C64; MAP_LEN]> {
    let mut m = Box::new([c64(0.0, 0.0); MAP_LEN]);
    for i in 0..VEC_LEN {
        m[VEC_LEN * i + i] = c64(1.0, 0.0);
    }
    m
}

/// One-step Runge-Kutta maps of size `h`: columns are the images of the 16
/// elementary matrices under (state, sensitivity) stepping from sens = 0.
fn one_step_maps(
    hamiltonian: &ComplexMatrix,
    gamma: f64,
    generator: &ComplexMatrix,
    h: f64,
) -> (Box<[C64; MAP_LEN]>, Box<[C64; MAP_LEN]>) {
    let mut a = Box::new([c64(0.0, 0.0); MAP_LEN]);
    let mut b = Box::new([c64(0.0, 0.0); MAP_LEN]);
    for col in 0..VEC_LEN {
        let mut basis = ComplexMatrix::zeros(4);
        basis.set(col / 4, col % 4, c64(1.0, 0.0));
        let zero = ComplexMatrix::zeros(4);
        let (r, s) = rk4_joint_step(hamiltonian, gamma, generator, &basis, &zero, h);
        let rv = vectorize(&r);
        let sv = vectorize(&s);
        for row in 0..VEC_LEN {
            a[VEC_LEN * row + col] = rv[row];
            b[VEC_LEN * row + col] = sv[row];
        }
    }
    (a, b)
}

impl PropagatorTable {
    /// Builds cumulative maps on the uniform lattice dt, 2dt, ..., n*dt with
    /// n = round(t_max / dt); each lattice step is one Runge-Kutta step.
    pub fn lattice(
        hamiltonian: &ComplexMatrix,
        gamma: f64,
        generator: &ComplexMatrix,
        t_max: f64,
        dt: f64,
    ) -> Result<Self> {
        if hamiltonian.dim() != 4 || generator.dim() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, got: hamiltonian.dim().min(generator.dim()) });
        }
        if !(dt > 0.0 && t_max > dt / 2.0) {
            return Err(Error::InvalidSpec(format!(
                "lattice needs positive dt (got {dt}) and t_max (got {t_max})"
            )));
        }
        let n = (t_max / dt).round() as usize;
        let (step_a, step_b) = one_step_maps(hamiltonian, gamma, generator, dt);
        let mut maps = Vec::with_capacity(n + 1);
        let mut times = Vec::with_capacity(n + 1);
        maps.push(CumulativeMaps { phi: identity_map(), sens: Box::new([c64(0.0, 0.0); MAP_LEN]) });
        times.push(0.0);
        for k in 1..=n {
            let prev = &maps[k - 1];
            // sens_k = B phi_{k-1} + A sens_{k-1}; phi_k = A phi_{k-1}
            let mut sens = map_mul(&step_b, &prev.phi);
            let via_a = map_mul(&step_a, &prev.sens);
            map_add(&mut sens, &via_a);
            let phi = map_mul(&step_a, &prev.phi);
            maps.push(CumulativeMaps { phi, sens });
            times.push(k as f64 * dt);
        }
        Ok(PropagatorTable { times, maps, lattice_dt: Some(dt) })
    }

    /// Builds cumulative maps at exactly the supplied (strictly increasing,
    /// positive) times, integrating each segment with at least
    /// ceil(length * steps_per_unit) Runge-Kutta steps.
    pub fn for_times(
        hamiltonian: &ComplexMatrix,
        gamma: f64,
        generator: &ComplexMatrix,
        times: &[f64],
        steps_per_unit: usize,
    ) -> Result<Self> {
        if hamiltonian.dim() != 4 || generator.dim() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, got: hamiltonian.dim().min(generator.dim()) });
        }
        if times.is_empty() {
            return Err(Error::InvalidSpec("time grid is empty".into()));
        }
        if steps_per_unit == 0 {
            return Err(Error::StepCount("steps_per_unit must be at least 1".into()));
        }
        let mut prev = 0.0;
        for &t in times {
            if !(t.is_finite() && t > prev) {
                return Err(Error::InvalidSpec(format!(
                    "time grid must be strictly increasing and positive (offending entry {t})"
                )));
            }
            prev = t;
        }
        let mut maps = Vec::with_capacity(times.len() + 1);
        let mut stored_times = Vec::with_capacity(times.len() + 1);
        maps.push(CumulativeMaps { phi: identity_map(), sens: Box::new([c64(0.0, 0.0); MAP_LEN]) });
        stored_times.push(0.0);
        let mut t_prev = 0.0;
        for &t in times {
            let span = t - t_prev;
            let steps = ((span * steps_per_unit as f64).ceil() as usize).max(1);
            let h = span / steps as f64;
            let (step_a, step_b) = one_step_maps(hamiltonian, gamma, generator, h);
            let mut phi = maps.last().unwrap().phi.clone();
            let mut sens = maps.last().unwrap().sens.clone();
            for _ in 0..steps {
                let mut s_next = map_mul(&step_b, &phi);
                let via_a = map_mul(&step_a, &sens);
                map_add(&mut s_next, &via_a);
                phi = map_mul(&step_a, &phi);
                sens = s_next;
            }
            maps.push(CumulativeMaps { phi, sens });
            stored_times.push(t);
            t_prev = t;
        }
        Ok(PropagatorTable { times: stored_times, maps, lattice_dt: None })
    }

    /// Number of stored times, excluding the identity entry at t = 0.
    pub fn len(&self) -> usize {
        self.maps.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The time associated with a stored index.
    pub fn time_at(&self, idx: usize) -> f64 {
        self.times[idx]
    }

    /// Nearest stored index to `t`, clamped to [1, len] so that the result
    /// always denotes a strictly positive time.
    pub fn index_for(&self, t: f64) -> usize {
        let n = self.len();
        if let Some(dt) = self.lattice_dt {
            return ((t / dt).round() as isize).clamp(1, n as isize) as usize;
        }
        let mut best = 1;
        let mut best_gap = f64::INFINITY;
        for (k, &tk) in self.times.iter().enumerate().skip(1) {
            let gap = (t - tk).abs();
            if gap < best_gap {
                best_gap = gap;
                best = k;
            }
        }
        best
    }

    /// Applies the stored maps: returns (rho(t_idx), d rho(t_idx)/d theta)
    /// for the given initial state.
    pub fn apply(&self, idx: usize, initial: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
        let v = vectorize(initial);
        let entry = &self.maps[idx];
        let rv = map_vec(&entry.phi, &v);
        let sv = map_vec(&entry.sens, &v);
        (matricize(&rv), matricize(&sv))
    }
}
