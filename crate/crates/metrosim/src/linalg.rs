//! Small dense complex linear algebra for one- and two-qubit problems.
//!
//! Everything here is specialized to dimensions 2 and 4 and kept
//! allocation-free: matrices and vectors are fixed 4x4 / 4-element arrays
//! tagged with their logical dimension. Row-major storage, basis order
//! |00>, |01>, |10>, |11> with qubit 1 as the left tensor factor.

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;

/// Convenience constructor for a complex scalar.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix of dimension 2 or 4.
#[derive(Clone, Copy, Debug)]
pub struct ComplexMatrix {
    dim: usize,
    data: [C64; 16],
}

/// Complex column vector of dimension 2 or 4.
#[derive(Clone, Copy, Debug)]
pub struct ComplexVector {
    dim: usize,
    data: [C64; 4],
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 4 {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: 4, got: dim })
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        debug_assert!(dim == 2 || dim == 4);
        ComplexMatrix { dim, data: [ZERO; 16] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, ONE);
        }
        m
    }

    /// Builds a matrix from row slices; every row must have length `rows.len()`.
    pub fn from_rows(rows: &[&[C64]]) -> Result<Self> {
        let dim = rows.len();
        check_dim(dim)?;
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    /// Real diagonal matrix.
    pub fn diag(entries: &[f64]) -> Result<Self> {
        check_dim(entries.len())?;
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m.set(i, i, c64(v, 0.0));
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i * self.dim + j] = v;
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for k in 0..self.dim * self.dim {
            out.data[k] += other.data[k];
        }
        out
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for k in 0..self.dim * self.dim {
            out.data[k] -= other.data[k];
        }
        out
    }

    pub fn scale(&self, s: C64) -> ComplexMatrix {
        let mut out = *self;
        for k in 0..self.dim * self.dim {
            out.data[k] *= s;
        }
        out
    }

    /// In-place `self += s * other`; the axpy used by the integrator.
    #[inline]
    pub fn add_scaled(&mut self, other: &ComplexMatrix, s: f64) {
        debug_assert_eq!(self.dim, other.dim);
        for k in 0..self.dim * self.dim {
            self.data[k] += other.data[k] * s;
        }
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &ComplexVector) -> ComplexVector {
        debug_assert_eq!(self.dim, v.dim);
        let n = self.dim;
        let mut out = ComplexVector::zeros(n);
        for i in 0..n {
            let mut acc = ZERO;
            for j in 0..n {
                acc += self.data[i * n + j] * v.data[j];
            }
            out.data[i] = acc;
        }
        out
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        let mut acc = ZERO;
        for i in 0..self.dim {
            acc += self.data[i * self.dim + i];
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data[..self.dim * self.dim]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from Hermiticity, max |m[i][j] - conj(m[j][i])|.
    pub fn hermitian_asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Hermitian part (m + m†)/2; cheap hygiene after long integrations.
    pub fn hermitized(&self) -> ComplexMatrix {
        let adj = self.adjoint();
        self.add(&adj).scale(c64(0.5, 0.0))
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut worst = 0.0f64;
        for k in 0..self.dim * self.dim {
            worst = worst.max((self.data[k] - other.data[k]).norm());
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data[..self.dim * self.dim]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl ComplexVector {
    pub fn zeros(dim: usize) -> Self {
        debug_assert!(dim == 2 || dim == 4);
        ComplexVector { dim, data: [ZERO; 4] }
    }

    /// Computational basis vector |k>.
    pub fn basis(dim: usize, k: usize) -> Self {
        debug_assert!(k < dim);
        let mut v = Self::zeros(dim);
        v.data[k] = ONE;
        v
    }

    pub fn from_slice(entries: &[C64]) -> Result<Self> {
        check_dim(entries.len())?;
        let mut v = Self::zeros(entries.len());
        v.data[..entries.len()].copy_from_slice(entries);
        Ok(v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, k: usize) -> C64 {
        debug_assert!(k < self.dim);
        self.data[k]
    }

    #[inline]
    pub fn set(&mut self, k: usize, v: C64) {
        debug_assert!(k < self.dim);
        self.data[k] = v;
    }

    /// <self|other> with the conjugate on self.
    pub fn inner(&self, other: &ComplexVector) -> C64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut acc = ZERO;
        for k in 0..self.dim {
            acc += self.data[k].conj() * other.data[k];
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.sqrt()
    }

    pub fn normalized(&self) -> ComplexVector {
        let n = self.norm();
        let mut out = *self;
        if n > 0.0 {
            for k in 0..self.dim {
                out.data[k] /= n;
            }
        }
        out
    }

    /// Rank-one projector |self><self|.
    pub fn outer(&self) -> ComplexMatrix {
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, self.data[i] * self.data[j].conj());
            }
        }
        out
    }

    /// <self| m |self>; real for Hermitian m up to round-off.
    pub fn expectation(&self, m: &ComplexMatrix) -> C64 {
        self.inner(&m.matvec(self))
    }
}

/// i(ab - ba) is not needed; the commutator ab - ba itself is.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.mul(b).sub(&b.mul(a))
}

// ---------------------------------------------------------------------------
// Pauli matrices and tensor products
// ---------------------------------------------------------------------------

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]).unwrap()
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[ZERO, c64(0.0, -1.0)], &[c64(0.0, 1.0), ZERO]]).unwrap()
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::diag(&[1.0, -1.0]).unwrap()
}

/// Kronecker product of two 2x2 matrices, qubit 1 on the left.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: a.dim() });
    }
    if b.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: b.dim() });
    }
    let mut out = ComplexMatrix::zeros(4);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out.set(2 * i + k, 2 * j + l, a.at(i, j) * b.at(k, l));
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of two single-qubit state vectors.
pub fn kron_vec(a: &ComplexVector, b: &ComplexVector) -> Result<ComplexVector> {
    if a.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: a.dim() });
    }
    if b.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: b.dim() });
    }
    let mut out = ComplexVector::zeros(4);
    for i in 0..2 {
        for k in 0..2 {
            out.set(2 * i + k, a.at(i) * b.at(k));
        }
    }
    Ok(out)
}

/// Which qubit survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeepQubit {
    First,
    Second,
}

/// Partial trace of a 4x4 two-qubit operator down to the kept qubit.
///
/// Works for any operator (trace is preserved exactly by construction);
/// density-matrix-specific validation is the caller's business.
pub fn partial_trace(rho: &ComplexMatrix, keep: KeepQubit) -> Result<ComplexMatrix> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: rho.dim() });
    }
    let mut out = ComplexMatrix::zeros(2);
    match keep {
        KeepQubit::First => {
            for i in 0..2 {
                for j in 0..2 {
                    out.set(i, j, rho.at(2 * i, 2 * j) + rho.at(2 * i + 1, 2 * j + 1));
                }
            }
        }
        KeepQubit::Second => {
            for k in 0..2 {
                for l in 0..2 {
                    out.set(k, l, rho.at(k, l) + rho.at(2 + k, 2 + l));
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition (cyclic Jacobi)
// ---------------------------------------------------------------------------

/// Tolerance on |m - m†| accepted by `hermitian_eig`.
pub const HERMITICITY_TOL: f64 = 1e-10;

fn offdiag_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a.at(i, j).norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Eigendecomposition of a Hermitian 2x2 or 4x4 matrix by cyclic Jacobi
/// rotations. Returns eigenvalues in descending order together with the
/// unitary of eigenvectors stored column-wise, so that
/// `m = v * diag(values) * v†`.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let asym = m.hermitian_asymmetry();
    if asym > HERMITICITY_TOL {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let n = m.dim();
    let mut a = m.hermitized();
    let mut v = ComplexMatrix::identity(n);

    // Off-diagonal norm target: nominally 1e-14, scaled up for matrices whose
    // norm makes that unreachable in f64.
    let target = 1e-14f64.max(a.max_abs() * 5e-16);
    let mut prev_off = f64::INFINITY;
    for _sweep in 0..60 {
        let off = offdiag_norm(&a);
        if off < target || off >= prev_off && off < 1e-12 {
            break;
        }
        prev_off = off;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.at(p, q);
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = a.at(p, p).re;
                let aqq = a.at(q, q).re;
                let phase = apq / mag;
                let d = (app - aqq) / (2.0 * mag);
                let sign = if d >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (d.abs() + (d * d + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let mut rot = ComplexMatrix::identity(n);
                rot.set(p, p, c64(c, 0.0));
                rot.set(p, q, phase.scale(-s));
                rot.set(q, p, phase.conj().scale(s));
                rot.set(q, q, c64(c, 0.0));

                a = rot.adjoint().mul(&a).mul(&rot);
                v = v.mul(&rot);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let values: Vec<f64> = (0..n).map(|i| a.at(i, i).re).collect();
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap());

    let sorted_values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut sorted_vecs = ComplexMatrix::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            sorted_vecs.set(row, new_col, v.at(row, old_col));
        }
    }
    Ok((sorted_values, sorted_vecs))
}

// ---------------------------------------------------------------------------
// Matrix exponential
// ---------------------------------------------------------------------------

/// Matrix exponential.
///
/// Hermitian and anti-Hermitian inputs (the generators that occur here:
/// Hamiltonians and -i H t propagator exponents) go through the exact
/// eigendecomposition route; anything else falls back to scaling-and-squaring
/// with a Taylor series.
pub fn expm(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_finite() {
        return Err(Error::InvalidState("expm of non-finite matrix".into()));
    }
    let scale = m.max_abs().max(1.0);
    if m.hermitian_asymmetry() <= 1e-13 * scale {
        // m = m†: exp(m) = V e^Λ V†.
        let (vals, vecs) = hermitian_eig(&m.hermitized())?;
        return Ok(recombine(&vals, &vecs, |x| c64(x.exp(), 0.0)));
    }
    let anti = anti_hermitian_asymmetry(m);
    if anti <= 1e-13 * scale {
        // m = -iH with H = i m Hermitian: exp(m) = V e^{-iΛ} V†.
        let h = m.scale(c64(0.0, 1.0)).hermitized();
        let (vals, vecs) = hermitian_eig(&h)?;
        return Ok(recombine(&vals, &vecs, |x| c64(x.cos(), -x.sin())));
    }
    Ok(expm_taylor(m))
}

fn anti_hermitian_asymmetry(m: &ComplexMatrix) -> f64 {
    let n = m.dim();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m.at(i, j) + m.at(j, i).conj()).norm());
        }
    }
    worst
}

fn recombine(vals: &[f64], vecs: &ComplexMatrix, f: impl Fn(f64) -> C64) -> ComplexMatrix {
    let n = vecs.dim();
    let mut d = ComplexMatrix::zeros(n);
    for (i, &x) in vals.iter().enumerate() {
        d.set(i, i, f(x));
    }
    vecs.mul(&d).mul(&vecs.adjoint())
}

/// Scaling-and-squaring Taylor fallback for general matrices.
pub(crate) fn expm_taylor(m: &ComplexMatrix) -> ComplexMatrix {
    let norm = m.max_abs();
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m.scale(c64(0.5f64.powi(squarings as i32), 0.0));

    let mut result = ComplexMatrix::identity(m.dim());
    let mut term = ComplexMatrix::identity(m.dim());
    for k in 1..64 {
        term = term.mul(&scaled).scale(c64(1.0 / k as f64, 0.0));
        result = result.add(&term);
        if term.max_abs() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.mul(&result);
    }
    result
}
