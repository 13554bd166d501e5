//! Two-qubit Hamiltonians, probe-state families and measurement families.
//!
//! All quantities are dimensionless: energies carry a factor of the total
//! interrogation time unit, so `omega`, `coupling_j`, `field_h` and `gamma`
//! are the products of the physical rates with that unit, and evolution
//! times live in (0, 2].

use crate::error::{Error, Result};
use crate::linalg::{
    c64, kron, kron_vec, pauli_x, pauli_z, ComplexMatrix, ComplexVector, C64,
};

/// Which Hamiltonian parameter is being estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parameter {
    /// Qubit frequency (the coefficient of the level term on each qubit).
    Omega,
    /// Transverse-field amplitude.
    FieldH,
    /// Ising zz coupling strength.
    CouplingJ,
}

impl Parameter {
    pub fn label(&self) -> &'static str {
        match self {
            Parameter::Omega => "omega",
            Parameter::FieldH => "h",
            Parameter::CouplingJ => "j",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "omega" => Ok(Parameter::Omega),
            "h" => Ok(Parameter::FieldH),
            "j" => Ok(Parameter::CouplingJ),
            other => Err(Error::InvalidConfig(format!(
                "unknown parameter '{other}' (expected omega|h|j)"
            ))),
        }
    }
}

/// The five two-qubit Hamiltonians under study.
///
/// The baseline is two identical non-interacting qubits with level term
/// -omega |1><1| each; the variants add an Ising zz coupling, a transverse
/// field on both qubits, both at once, or keep only the coupling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HamiltonianKind {
    /// Frequency terms only (CLI name `ideal`).
    Ideal,
    /// Frequency plus Ising coupling (CLI name `h1`).
    Ising,
    /// Frequency plus transverse field (CLI name `h2`).
    Transverse,
    /// Frequency plus Ising coupling plus transverse field (CLI name `h3`).
    IsingTransverse,
    /// Ising coupling alone (CLI name `h4`).
    IsingOnly,
}

impl HamiltonianKind {
    pub fn label(&self) -> &'static str {
        match self {
            HamiltonianKind::Ideal => "ideal",
            HamiltonianKind::Ising => "h1",
            HamiltonianKind::Transverse => "h2",
            HamiltonianKind::IsingTransverse => "h3",
            HamiltonianKind::IsingOnly => "h4",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ideal" => Ok(HamiltonianKind::Ideal),
            "h1" => Ok(HamiltonianKind::Ising),
            "h2" => Ok(HamiltonianKind::Transverse),
            "h3" => Ok(HamiltonianKind::IsingTransverse),
            "h4" => Ok(HamiltonianKind::IsingOnly),
            other => Err(Error::InvalidConfig(format!(
                "unknown hamiltonian kind '{other}' (expected ideal|h1|h2|h3|h4)"
            ))),
        }
    }

    fn uses_omega(&self) -> bool {
        !matches!(self, HamiltonianKind::IsingOnly)
    }

    fn uses_coupling(&self) -> bool {
        matches!(
            self,
            HamiltonianKind::Ising | HamiltonianKind::IsingTransverse | HamiltonianKind::IsingOnly
        )
    }

    fn uses_field(&self) -> bool {
        matches!(
            self,
            HamiltonianKind::Transverse | HamiltonianKind::IsingTransverse
        )
    }
}

/// A fully specified Hamiltonian together with the parameter to estimate.
#[derive(Clone, Copy, Debug)]
pub struct HamiltonianSpec {
    pub kind: HamiltonianKind,
    pub omega: f64,
    pub coupling_j: f64,
    pub field_h: f64,
    pub estimated: Parameter,
}

impl HamiltonianSpec {
    /// Validating constructor: parameters that do not occur in `kind` must be
    /// exactly zero and the estimated parameter must occur in `kind`.
    pub fn new(
        kind: HamiltonianKind,
        omega: f64,
        coupling_j: f64,
        field_h: f64,
        estimated: Parameter,
    ) -> Result<Self> {
        for (name, value, used) in [
            ("omega", omega, kind.uses_omega()),
            ("coupling_j", coupling_j, kind.uses_coupling()),
            ("field_h", field_h, kind.uses_field()),
        ] {
            if !value.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} is not finite")));
            }
            if !used && value != 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "{name} = {value} but {} has no such term",
                    kind.label()
                )));
            }
        }
        let estimated_present = match estimated {
            Parameter::Omega => kind.uses_omega(),
            Parameter::CouplingJ => kind.uses_coupling(),
            Parameter::FieldH => kind.uses_field(),
        };
        if !estimated_present {
            return Err(Error::InvalidSpec(format!(
                "cannot estimate {} on {}: the Hamiltonian has no such term",
                estimated.label(),
                kind.label()
            )));
        }
        Ok(HamiltonianSpec { kind, omega, coupling_j, field_h, estimated })
    }

    /// The 4x4 Hamiltonian matrix in the computational basis.
    pub fn hamiltonian(&self) -> ComplexMatrix {
        let mut h = ComplexMatrix::zeros(4);
        if self.kind.uses_omega() {
            // -omega (|1><1| (x) I + I (x) |1><1|) = diag(0, -w, -w, -2w)
            h = h.add(&ComplexMatrix::diag(&[0.0, -self.omega, -self.omega, -2.0 * self.omega]).unwrap());
        }
        if self.kind.uses_coupling() {
            let zz = kron(&pauli_z(), &pauli_z()).unwrap();
            h = h.add(&zz.scale(c64(self.coupling_j, 0.0)));
        }
        if self.kind.uses_field() {
            h = h.add(&transverse_sum().scale(c64(self.field_h, 0.0)));
        }
        h
    }

    /// dH/d(estimated parameter); constant for every kind here.
    pub fn parameter_generator(&self) -> ComplexMatrix {
        match self.estimated {
            Parameter::Omega => ComplexMatrix::diag(&[0.0, -1.0, -1.0, -2.0]).unwrap(),
            Parameter::CouplingJ => kron(&pauli_z(), &pauli_z()).unwrap(),
            Parameter::FieldH => transverse_sum(),
        }
    }
}

/// sigma_x^(1) + sigma_x^(2) on the pair.
fn transverse_sum() -> ComplexMatrix {
    let id = ComplexMatrix::identity(2);
    kron(&pauli_x(), &id).unwrap().add(&kron(&id, &pauli_x()).unwrap())
}

// ---------------------------------------------------------------------------
// Probe states
// ---------------------------------------------------------------------------

/// Euler-style angles of a single-qubit unitary
///
/// ```text
/// U = [ e^{ i(alpha+beta)/2} cos(gamma/2)   e^{-i(alpha-beta)/2} sin(gamma/2) ]
///     [-e^{ i(alpha-beta)/2} sin(gamma/2)   e^{-i(alpha+beta)/2} cos(gamma/2) ]
/// ```
#[derive(Clone, Copy, Debug, Default)]
pub struct LocalUnitaryAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl LocalUnitaryAngles {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        LocalUnitaryAngles { alpha, beta, gamma }
    }
}

/// The 2x2 unitary parameterized by `LocalUnitaryAngles`.
pub fn local_unitary(angles: &LocalUnitaryAngles) -> ComplexMatrix {
    let half_sum = (angles.alpha + angles.beta) / 2.0;
    let half_diff = (angles.alpha - angles.beta) / 2.0;
    let (cg, sg) = ((angles.gamma / 2.0).cos(), (angles.gamma / 2.0).sin());
    let mut u = ComplexMatrix::zeros(2);
    u.set(0, 0, C64::from_polar(cg, half_sum));
    u.set(0, 1, C64::from_polar(sg, -half_diff));
    u.set(1, 0, -C64::from_polar(sg, half_diff));
    u.set(1, 1, C64::from_polar(cg, -half_sum));
    u
}

/// Probe families: a separable pair, local rotations of the maximally
/// entangled pair, or local rotations of a partially entangled pair with
/// fixed Schmidt weight `alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeFamily {
    Product,
    MaxEntangled,
    Partial,
}

/// Concrete probe parameters.
#[derive(Clone, Copy, Debug)]
pub enum ProbeParams {
    /// (cos(t1/2)|0> + e^{i d1} sin(t1/2)|1>) (x) (same with t2, d2).
    Product { theta1: f64, delta1: f64, theta2: f64, delta2: f64 },
    /// (U_a (x) U_b)(|00> + |11>)/sqrt(2).
    MaxEntangled { local_a: LocalUnitaryAngles, local_b: LocalUnitaryAngles },
    /// (U_a (x) U_b)(alpha |00> + sqrt(1-alpha^2)|11>).
    Partial { alpha: f64, local_a: LocalUnitaryAngles, local_b: LocalUnitaryAngles },
}

const ANGLE_MAX: f64 = 2.0 * std::f64::consts::PI;

fn check_angle(name: &str, value: f64) -> Result<()> {
    if !(0.0..=ANGLE_MAX + 1e-12).contains(&value) {
        return Err(Error::InvalidState(format!(
            "angle {name} = {value} outside [0, 2*pi]"
        )));
    }
    Ok(())
}

fn check_local(name: &str, a: &LocalUnitaryAngles) -> Result<()> {
    check_angle(name, a.alpha)?;
    check_angle(name, a.beta)?;
    check_angle(name, a.gamma)
}

impl ProbeParams {
    pub fn family(&self) -> ProbeFamily {
        match self {
            ProbeParams::Product { .. } => ProbeFamily::Product,
            ProbeParams::MaxEntangled { .. } => ProbeFamily::MaxEntangled,
            ProbeParams::Partial { .. } => ProbeFamily::Partial,
        }
    }

    /// Validates angle boxes (all angles in [0, 2*pi]; the boxes are
    /// deliberately redundant, several angle combinations reach the same
    /// state) and the Schmidt weight alpha in [0, 1].
    pub fn validate(&self) -> Result<()> {
        match self {
            ProbeParams::Product { theta1, delta1, theta2, delta2 } => {
                check_angle("theta1", *theta1)?;
                check_angle("delta1", *delta1)?;
                check_angle("theta2", *theta2)?;
                check_angle("delta2", *delta2)
            }
            ProbeParams::MaxEntangled { local_a, local_b } => {
                check_local("local_a", local_a)?;
                check_local("local_b", local_b)
            }
            ProbeParams::Partial { alpha, local_a, local_b } => {
                if !(0.0..=1.0).contains(alpha) {
                    return Err(Error::InvalidState(format!(
                        "alpha = {alpha} outside [0, 1]"
                    )));
                }
                check_local("local_a", local_a)?;
                check_local("local_b", local_b)
            }
        }
    }

    /// The normalized two-qubit probe vector.
    pub fn state_vector(&self) -> Result<ComplexVector> {
        self.validate()?;
        match self {
            ProbeParams::Product { theta1, delta1, theta2, delta2 } => {
                let q1 = bloch_vector(*theta1, *delta1);
                let q2 = bloch_vector(*theta2, *delta2);
                kron_vec(&q1, &q2)
            }
            ProbeParams::MaxEntangled { local_a, local_b } => {
                rotated_schmidt_state(std::f64::consts::FRAC_1_SQRT_2, local_a, local_b)
            }
            ProbeParams::Partial { alpha, local_a, local_b } => {
                rotated_schmidt_state(*alpha, local_a, local_b)
            }
        }
    }

    /// Concurrence of the (pure) probe: 2 |a d - b c| over the amplitudes in
    /// the computational basis. Invariant under the local rotations.
    pub fn concurrence(&self) -> Result<f64> {
        let v = self.state_vector()?;
        let det = v.at(0) * v.at(3) - v.at(1) * v.at(2);
        Ok(2.0 * det.norm())
    }
}

/// cos(theta/2)|0> + e^{i delta} sin(theta/2)|1>.
fn bloch_vector(theta: f64, delta: f64) -> ComplexVector {
    let mut v = ComplexVector::zeros(2);
    v.set(0, c64((theta / 2.0).cos(), 0.0));
    v.set(1, C64::from_polar((theta / 2.0).sin(), delta));
    v
}

/// (U_a (x) U_b)(w |00> + sqrt(1-w^2) |11>).
fn rotated_schmidt_state(
    weight: f64,
    local_a: &LocalUnitaryAngles,
    local_b: &LocalUnitaryAngles,
) -> Result<ComplexVector> {
    let ua = local_unitary(local_a);
    let ub = local_unitary(local_b);
    let complement = (1.0 - weight * weight).max(0.0).sqrt();
    let a0 = ComplexVector::from_slice(&[ua.at(0, 0), ua.at(1, 0)])?;
    let a1 = ComplexVector::from_slice(&[ua.at(0, 1), ua.at(1, 1)])?;
    let b0 = ComplexVector::from_slice(&[ub.at(0, 0), ub.at(1, 0)])?;
    let b1 = ComplexVector::from_slice(&[ub.at(0, 1), ub.at(1, 1)])?;
    let t00 = kron_vec(&a0, &b0)?;
    let t11 = kron_vec(&a1, &b1)?;
    let mut out = ComplexVector::zeros(4);
    for k in 0..4 {
        out.set(k, t00.at(k) * weight + t11.at(k) * complement);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Measurement projectors
// ---------------------------------------------------------------------------

/// Angles of one single-qubit projector cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>.
#[derive(Clone, Copy, Debug, Default)]
pub struct ProjectorAngles {
    pub theta: f64,
    pub phi: f64,
}

impl ProjectorAngles {
    pub fn new(theta: f64, phi: f64) -> Self {
        ProjectorAngles { theta, phi }
    }
}

/// The projector state vector of a single-qubit measurement.
pub fn projector_vector(angles: &ProjectorAngles) -> ComplexVector {
    let mut v = ComplexVector::zeros(2);
    v.set(0, c64((angles.theta / 2.0).cos(), 0.0));
    v.set(1, C64::from_polar((angles.theta / 2.0).sin(), angles.phi));
    v
}

/// Measurement families.
///
/// `SingleQubit` measures each qubit of the pair independently in its own
/// projector basis (binary outcome per qubit). `TwoQubit` projects the pair
/// onto one vector built from local unitaries sandwiching an entangling core
/// exp(-i(ax XX + ay YY + az ZZ)).
#[derive(Clone, Copy, Debug)]
pub enum MeasurementParams {
    SingleQubit { qubits: [ProjectorAngles; 2] },
    TwoQubit {
        outer: [LocalUnitaryAngles; 2],
        inner: [LocalUnitaryAngles; 2],
        core: [f64; 3],
    },
}

/// Built measurement vectors: one dim-2 projector per qubit, or one joint
/// dim-4 projector.
#[derive(Clone, Copy, Debug)]
pub enum MeasurementVector {
    PerQubit([ComplexVector; 2]),
    Joint(ComplexVector),
}

impl MeasurementParams {
    pub fn validate(&self) -> Result<()> {
        match self {
            MeasurementParams::SingleQubit { qubits } => {
                for (i, q) in qubits.iter().enumerate() {
                    check_angle(&format!("theta[{i}]"), q.theta)?;
                    check_angle(&format!("phi[{i}]"), q.phi)?;
                }
                Ok(())
            }
            MeasurementParams::TwoQubit { outer, inner, core } => {
                check_local("outer_a", &outer[0])?;
                check_local("outer_b", &outer[1])?;
                check_local("inner_a", &inner[0])?;
                check_local("inner_b", &inner[1])?;
                for (i, &a) in core.iter().enumerate() {
                    if !(0.0..=std::f64::consts::PI + 1e-12).contains(&a) {
                        return Err(Error::InvalidState(format!(
                            "core angle [{i}] = {a} outside [0, pi]"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Builds the normalized measurement vector(s).
    pub fn build(&self) -> Result<MeasurementVector> {
        self.validate()?;
        match self {
            MeasurementParams::SingleQubit { qubits } => Ok(MeasurementVector::PerQubit([
                projector_vector(&qubits[0]),
                projector_vector(&qubits[1]),
            ])),
            MeasurementParams::TwoQubit { outer, inner, core } => {
                let ua_in = local_unitary(&inner[0]);
                let ub_in = local_unitary(&inner[1]);
                let seed = kron_vec(
                    &ComplexVector::from_slice(&[ua_in.at(0, 0), ua_in.at(1, 0)])?,
                    &ComplexVector::from_slice(&[ub_in.at(0, 0), ub_in.at(1, 0)])?,
                )?;
                let core_u = entangling_core_unitary(core[0], core[1], core[2]);
                let mid = core_u.matvec(&seed);
                let ua = local_unitary(&outer[0]);
                let ub = local_unitary(&outer[1]);
                let full = kron(&ua, &ub)?;
                Ok(MeasurementVector::Joint(full.matvec(&mid)))
            }
        }
    }
}

/// exp(-i (ax XX + ay YY + az ZZ)) in closed form.
///
/// XX, YY and ZZ commute and share the Bell eigenbasis, so the exponential
/// is a phase per Bell vector: |phi+/-> pick up ax -/+ ... as below, |psi+/->
/// the complementary combinations.
pub fn entangling_core_unitary(ax: f64, ay: f64, az: f64) -> ComplexMatrix {
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    // Bell vectors and their (XX, YY, ZZ) eigenvalue triples.
    let bell: [([C64; 4], f64); 4] = [
        // |phi+> = (|00> + |11>)/sqrt(2): (+1, -1, +1)
        ([c64(inv, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(inv, 0.0)], ax - ay + az),
        // |phi-> = (|00> - |11>)/sqrt(2): (-1, +1, +1)
        ([c64(inv, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(-inv, 0.0)], -ax + ay + az),
        // |psi+> = (|01> + |10>)/sqrt(2): (+1, +1, -1)
        ([c64(0.0, 0.0), c64(inv, 0.0), c64(inv, 0.0), c64(0.0, 0.0)], ax + ay - az),
        // |psi-> = (|01> - |10>)/sqrt(2): (-1, -1, -1)
        ([c64(0.0, 0.0), c64(inv, 0.0), c64(-inv, 0.0), c64(0.0, 0.0)], -ax - ay - az),
    ];
    let mut u = ComplexMatrix::zeros(4);
    for (vec, phase) in &bell {
        let factor = C64::from_polar(1.0, -phase);
        for i in 0..4 {
            for j in 0..4 {
                let term = vec[i] * vec[j].conj() * factor;
                u.set(i, j, u.at(i, j) + term);
            }
        }
    }
    u
}
