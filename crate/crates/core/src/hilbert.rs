//! Dense complex linear algebra on finite Hilbert spaces: tensor products,
//! commutators, Hermitian propagators, expectations, fidelities.
//!
//! Everything here is immutable after construction and every operation is a
//! pure function, so values can be shared freely across threads.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::policy::POLICY;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense square complex matrix acting on a finite Hilbert space.
///
/// Operators built by a Hermitian-tagging constructor are validated against
/// the policy tolerance; the tag is carried through the few algebraic
/// operations that preserve it.
#[derive(Clone, Debug)]
pub struct Operator {
    matrix: CMatrix,
    hermitian: bool,
}

impl Operator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::ShapeMismatch {
                left: matrix.nrows(),
                right: matrix.ncols(),
            });
        }
        if matrix.nrows() == 0 || matrix.nrows() > POLICY.max_dim {
            return Err(Error::DimTooLarge {
                requested: matrix.nrows(),
                max: POLICY.max_dim,
            });
        }
        Ok(Operator {
            matrix,
            hermitian: false,
        })
    }

    /// Construct an operator that claims to be Hermitian; the claim is
    /// checked against the policy tolerance.
    pub fn hermitian(matrix: CMatrix) -> Result<Self> {
        let mut op = Operator::new(matrix)?;
        let defect = op.hermiticity_defect();
        let tol = POLICY.hermiticity * op.max_abs().max(1.0);
        if defect > tol {
            return Err(Error::NotHermitian { defect, tol });
        }
        op.hermitian = true;
        Ok(op)
    }

    pub fn identity(dim: usize) -> Self {
        Operator {
            matrix: CMatrix::identity(dim, dim),
            hermitian: true,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Operator {
            matrix: CMatrix::zeros(dim, dim),
            hermitian: true,
        }
    }

    pub fn from_diagonal_real(diag: &[f64]) -> Self {
        let v = CVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        Operator {
            matrix: CMatrix::from_diagonal(&v),
            hermitian: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_tagged_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> Self {
        Operator {
            matrix: self.matrix.adjoint(),
            hermitian: self.hermitian,
        }
    }

    /// Scale by a complex factor; the Hermitian tag survives only real factors.
    pub fn scale(&self, s: Complex64) -> Self {
        Operator {
            matrix: self.matrix.scale_complex(s),
            hermitian: self.hermitian && s.im == 0.0,
        }
    }

    /// k-th matrix power; `pow(0)` is the identity.
    pub fn pow(&self, k: usize) -> Self {
        let mut out = Operator::identity(self.dim());
        for _ in 0..k {
            out = Operator {
                matrix: &out.matrix * &self.matrix,
                hermitian: false,
            };
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let adj = self.matrix.adjoint();
        (&self.matrix - adj).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-abs entrywise distance to another operator.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "operator dimensions must agree");
        (&self.matrix - &other.matrix)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    fn checked_pair(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::ShapeMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }
}

trait ScaleComplex {
    fn scale_complex(&self, s: Complex64) -> CMatrix;
}

impl ScaleComplex for CMatrix {
    fn scale_complex(&self, s: Complex64) -> CMatrix {
        self.map(|c| c * s)
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions must agree");
        Operator {
            matrix: &self.matrix + &rhs.matrix,
            hermitian: self.hermitian && rhs.hermitian,
        }
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions must agree");
        Operator {
            matrix: &self.matrix - &rhs.matrix,
            hermitian: self.hermitian && rhs.hermitian,
        }
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions must agree");
        Operator {
            matrix: &self.matrix * &rhs.matrix,
            hermitian: false,
        }
    }
}

/// Tensor (Kronecker) product. Entry ((i*db + k), (j*db + l)) = A(i,j)*B(k,l).
pub fn kron(a: &Operator, b: &Operator) -> Result<Operator> {
    let da = a.dim();
    let db = b.dim();
    let dim = da.saturating_mul(db);
    if dim > POLICY.max_dim {
        return Err(Error::DimTooLarge {
            requested: dim,
            max: POLICY.max_dim,
        });
    }
    let matrix = a.matrix.kronecker(&b.matrix);
    Ok(Operator {
        matrix,
        hermitian: a.hermitian && b.hermitian,
    })
}

/// AB - BA.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    a.checked_pair(b)?;
    Ok(Operator {
        matrix: &a.matrix * &b.matrix - &b.matrix * &a.matrix,
        hermitian: false,
    })
}

/// n-fold nested commutator [iH, ... [iH, [iH, A]]].
///
/// Each level maps X to i(HX - XH); the result is Hermitian whenever H and A
/// are, which the tag records.
pub fn nested_commutator(h: &Operator, a: &Operator, n: usize) -> Result<Operator> {
    h.checked_pair(a)?;
    if n == 0 {
        return Err(Error::InvalidParams {
            reason: "nested commutator order must be at least 1".into(),
        });
    }
    let mut x = a.matrix.clone();
    for _ in 0..n {
        x = (&h.matrix * &x - &x * &h.matrix).scale_complex(I);
    }
    Ok(Operator {
        matrix: x,
        hermitian: h.hermitian && a.hermitian,
    })
}

/// Pure state on a finite Hilbert space; normalized within policy tolerance.
#[derive(Clone, Debug)]
pub struct Ket {
    amplitudes: CVector,
}

impl Ket {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidParams {
                reason: "state vector must not be empty".into(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > POLICY.state_norm {
            return Err(Error::NotNormalized {
                norm,
                tol: POLICY.state_norm,
            });
        }
        Ok(Ket { amplitudes })
    }

    /// Normalize an arbitrary nonzero amplitude vector.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::NotNormalized { norm, tol: POLICY.state_norm });
        }
        Ket::new(amplitudes.unscale(norm))
    }

    /// Basis vector |index> on a space of the given dimension.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidParams {
                reason: format!("basis index {index} out of range for dimension {dim}"),
            });
        }
        let mut v = CVector::zeros(dim);
        v[index] = ONE;
        Ok(Ket { amplitudes: v })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn inner(&self, other: &Ket) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::ShapeMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// |self> tensor |other> in that factor order.
    pub fn tensor(&self, other: &Ket) -> Result<Ket> {
        let dim = self.dim().saturating_mul(other.dim());
        if dim > POLICY.max_dim {
            return Err(Error::DimTooLarge {
                requested: dim,
                max: POLICY.max_dim,
            });
        }
        Ok(Ket {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        })
    }
}

/// <psi|A|psi>.
pub fn expectation(state: &Ket, a: &Operator) -> Result<Complex64> {
    if state.dim() != a.dim() {
        return Err(Error::ShapeMismatch {
            left: state.dim(),
            right: a.dim(),
        });
    }
    Ok(state.amplitudes.dotc(&(&a.matrix * &state.amplitudes)))
}

/// Real part of a Hermitian expectation, asserting the imaginary leak is
/// within policy.
pub fn expectation_real(state: &Ket, a: &Operator) -> Result<f64> {
    let v = expectation(state, a)?;
    debug_assert!(
        !a.hermitian || v.im.abs() <= POLICY.imaginary_leak * v.norm().max(1.0) * 10.0,
        "imaginary leak {} on a Hermitian expectation",
        v.im
    );
    Ok(v.re)
}

/// Positive unit-trace matrix on a finite Hilbert space.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::ShapeMismatch {
                left: matrix.nrows(),
                right: matrix.ncols(),
            });
        }
        let max_abs = matrix.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let defect = {
            let adj = matrix.adjoint();
            (&matrix - adj).iter().map(|c| c.norm()).fold(0.0, f64::max)
        };
        if defect > POLICY.hermiticity * max_abs.max(1.0) {
            return Err(Error::InvalidDensityMatrix {
                reason: format!("not Hermitian: defect {defect:.3e}"),
            });
        }
        let trace = matrix.diagonal().iter().map(|c| c.re).sum::<f64>();
        if (trace - 1.0).abs() > POLICY.trace {
            return Err(Error::InvalidDensityMatrix {
                reason: format!("trace {trace} deviates from 1"),
            });
        }
        let min_eig = matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, &x| m.min(x));
        if min_eig < POLICY.eigenvalue_floor {
            return Err(Error::InvalidDensityMatrix {
                reason: format!("negative eigenvalue {min_eig:.3e}"),
            });
        }
        Ok(DensityMatrix { matrix })
    }

    pub fn pure(state: &Ket) -> Self {
        let v = &state.amplitudes;
        DensityMatrix {
            matrix: v * v.adjoint(),
        }
    }

    /// Convex mixture of pure states; weights must sum to 1.
    pub fn mixture(parts: &[(f64, Ket)]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidParams {
                reason: "mixture needs at least one component".into(),
            });
        }
        let dim = parts[0].1.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (w, k) in parts {
            if k.dim() != dim {
                return Err(Error::ShapeMismatch {
                    left: dim,
                    right: k.dim(),
                });
            }
            m += (&k.amplitudes * k.amplitudes.adjoint()).map(|c| c * *w);
        }
        DensityMatrix::new(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Tr[rho A].
pub fn expectation_mixed(rho: &DensityMatrix, a: &Operator) -> Result<Complex64> {
    if rho.dim() != a.dim() {
        return Err(Error::ShapeMismatch {
            left: rho.dim(),
            right: a.dim(),
        });
    }
    // Tr[rho A] = sum_{jk} rho_{jk} A_{kj}
    let mut tr = Complex64::new(0.0, 0.0);
    for j in 0..rho.dim() {
        for k in 0..rho.dim() {
            tr += rho.matrix[(j, k)] * a.matrix[(k, j)];
        }
    }
    Ok(tr)
}

/// |<psi|phi>|^2 for normalized pure states.
pub fn fidelity_pure(psi: &Ket, phi: &Ket) -> Result<f64> {
    Ok(psi.inner(phi)?.norm_sqr())
}

/// <psi|rho|psi>: fidelity between a pure state and a mixed state.
pub fn fidelity_pure_mixed(psi: &Ket, rho: &DensityMatrix) -> Result<f64> {
    if psi.dim() != rho.dim() {
        return Err(Error::ShapeMismatch {
            left: psi.dim(),
            right: rho.dim(),
        });
    }
    let v = psi.amplitudes.dotc(&(&rho.matrix * &psi.amplitudes));
    Ok(v.re)
}

/// Reduced state of the second tensor factor of a pure state on a
/// `first_dim x second_dim` product space.
pub fn reduced_second_factor(psi: &Ket, first_dim: usize, second_dim: usize) -> Result<DensityMatrix> {
    if psi.dim() != first_dim * second_dim {
        return Err(Error::ShapeMismatch {
            left: psi.dim(),
            right: first_dim * second_dim,
        });
    }
    let amp = &psi.amplitudes;
    let mut m = CMatrix::zeros(second_dim, second_dim);
    for i in 0..second_dim {
        for j in 0..second_dim {
            let mut s = Complex64::new(0.0, 0.0);
            for n in 0..first_dim {
                s += amp[n * second_dim + i] * amp[n * second_dim + j].conj();
            }
            m[(i, j)] = s;
        }
    }
    DensityMatrix::new(m)
}

/// Eigendecomposition of a Hermitian operator, reused to evolve states at
/// many times from a single factorization.
#[derive(Clone, Debug)]
pub struct Propagator {
    eigenvalues: DVector<f64>,
    eigenvectors: CMatrix,
}

impl Propagator {
    pub fn new(h: &Operator) -> Result<Self> {
        let defect = h.hermiticity_defect();
        let tol = POLICY.hermiticity * h.max_abs().max(1.0);
        if defect > tol {
            return Err(Error::NotHermitian { defect, tol });
        }
        let eig = h.matrix.clone().symmetric_eigen();
        let max_imag = eig
            .eigenvectors
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if !max_imag.is_finite() || eig.eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::EigenFailure {
                reason: format!(
                    "non-finite eigendecomposition (dim {}, max|H| {:.3e})",
                    h.dim(),
                    h.max_abs()
                ),
            });
        }
        Ok(Propagator {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Largest eigenvalue magnitude; a cheap operator-norm estimate.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    /// U(t) = exp(-iHt) = V exp(-i Lambda t) V†.
    pub fn unitary(&self, t: f64) -> Operator {
        let mut m = self.eigenvectors.clone();
        for j in 0..self.dim() {
            let phase = (-I * self.eigenvalues[j] * t).exp();
            for r in 0..self.dim() {
                m[(r, j)] *= phase;
            }
        }
        Operator {
            matrix: m * self.eigenvectors.adjoint(),
            hermitian: false,
        }
    }

    /// exp(-iHt)|psi>.
    pub fn evolve(&self, psi: &Ket, t: f64) -> Result<Ket> {
        if psi.dim() != self.dim() {
            return Err(Error::ShapeMismatch {
                left: psi.dim(),
                right: self.dim(),
            });
        }
        let mut coeffs = self.eigenvectors.adjoint() * &psi.amplitudes;
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c *= (-I * self.eigenvalues[j] * t).exp();
        }
        Ket::new(&self.eigenvectors * coeffs)
    }

    /// exp(-iHt) rho exp(+iHt).
    pub fn evolve_density(&self, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::ShapeMismatch {
                left: rho.dim(),
                right: self.dim(),
            });
        }
        let u = self.unitary(t);
        DensityMatrix::new(&u.matrix * &rho.matrix * u.matrix.adjoint())
    }

    /// Transform a vector into the eigenbasis.
    pub(crate) fn to_eigenbasis(&self, v: &CVector) -> CVector {
        self.eigenvectors.adjoint() * v
    }

    /// Transform an operator matrix into the eigenbasis: V† M V.
    pub(crate) fn conjugate_into_eigenbasis(&self, m: &CMatrix) -> CMatrix {
        self.eigenvectors.adjoint() * m * &self.eigenvectors
    }
}

/// exp(-iHt) for Hermitian H, via eigendecomposition.
pub fn expm_unitary(h: &Operator, t: f64) -> Result<Operator> {
    Ok(Propagator::new(h)?.unitary(t))
}
