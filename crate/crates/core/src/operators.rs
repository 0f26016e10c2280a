//! Constructors for bosonic, single-spin, and collective-spin operators and
//! for the initial states used throughout the experiments.
//!
//! Conventions fixed here and routed through everywhere else:
//! - two-level basis order is (|e>, |g>), so sigma_z |e> = +|e>;
//! - composite spaces are ordered field (x) atom, see [`composite_op`];
//! - collective spins live in the symmetric j = N/2 subspace (dimension N+1),
//!   basis ordered by descending m from +j to -j so N = 1 reduces to
//!   half the Pauli matrices.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{kron, CVector, Ket, Operator, ONE};
use crate::policy::POLICY;

/// Fock-basis truncation {|0>, ..., |d-1>}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FockCutoff(pub usize);

impl FockCutoff {
    pub fn dim(self) -> usize {
        self.0
    }

    pub fn validate(self) -> Result<()> {
        if self.0 < 2 {
            return Err(Error::InvalidParams {
                reason: format!("Fock cutoff {} must be at least 2", self.0),
            });
        }
        Ok(())
    }
}

/// Annihilation operator: entry (n-1, n) = sqrt(n).
pub fn annihilation(cutoff: FockCutoff) -> Result<Operator> {
    cutoff.validate()?;
    let d = cutoff.dim();
    let mut m = crate::hilbert::CMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    Operator::new(m)
}

/// Photon number operator a†a, exact diagonal.
pub fn number_operator(cutoff: FockCutoff) -> Result<Operator> {
    cutoff.validate()?;
    Ok(Operator::from_diagonal_real(
        &(0..cutoff.dim()).map(|n| n as f64).collect::<Vec<_>>(),
    ))
}

/// The five standard two-level operators in the (|e>, |g>) basis.
pub struct PauliOps {
    pub x: Operator,
    pub y: Operator,
    pub z: Operator,
    pub plus: Operator,
    pub minus: Operator,
}

pub fn pauli_ops() -> PauliOps {
    use crate::hilbert::CMatrix;
    let mut sp = CMatrix::zeros(2, 2);
    sp[(0, 1)] = ONE; // |e><g|
    let plus = Operator::new(sp).unwrap();
    let minus = plus.adjoint();
    let mut sy = CMatrix::zeros(2, 2);
    sy[(0, 1)] = Complex64::new(0.0, -1.0);
    sy[(1, 0)] = Complex64::new(0.0, 1.0);
    PauliOps {
        x: &plus + &minus,
        y: Operator::hermitian(sy).unwrap(),
        z: Operator::from_diagonal_real(&[1.0, -1.0]),
        plus,
        minus,
    }
}

/// Collective spin operators for N two-level atoms in the symmetric
/// j = N/2 subspace, basis |j, m> with m descending from +j to -j.
pub struct CollectiveSpinOps {
    pub x: Operator,
    pub y: Operator,
    pub z: Operator,
    pub plus: Operator,
    pub minus: Operator,
}

pub fn collective_spin(n_atoms: usize) -> Result<CollectiveSpinOps> {
    if n_atoms < 1 {
        return Err(Error::InvalidParams {
            reason: "collective spin needs at least one atom".into(),
        });
    }
    let dim = n_atoms + 1;
    let j = n_atoms as f64 / 2.0;
    let m_of = |k: usize| j - k as f64; // basis index k -> magnetic number m

    let z = Operator::from_diagonal_real(&(0..dim).map(m_of).collect::<Vec<_>>());

    use crate::hilbert::CMatrix;
    let mut plus = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        // J+ |j, m> = sqrt(j(j+1) - m(m+1)) |j, m+1>, ket index k has m, the
        // raised state sits at index k-1.
        let m = m_of(k);
        plus[(k - 1, k)] = Complex64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let plus = Operator::new(plus)?;
    let minus = plus.adjoint();
    let x = (&plus + &minus).scale(Complex64::new(0.5, 0.0));
    let y = (&minus - &plus).scale(Complex64::new(0.0, 0.5));
    Ok(CollectiveSpinOps { x, y, z, plus, minus })
}

/// Phase-rotated field quadrature (a e^{-i theta} + a† e^{i theta}) / sqrt(2).
pub fn quadrature(theta: f64, cutoff: FockCutoff) -> Result<Operator> {
    let a = annihilation(cutoff)?;
    let rot = Complex64::from_polar(1.0, -theta);
    let m = a.scale(rot);
    let sum = &m + &m.adjoint();
    Ok(sum.scale(Complex64::new(1.0 / 2f64.sqrt(), 0.0)))
}

/// Number state |n> on a truncated Fock space.
pub fn fock_state(n: usize, cutoff: FockCutoff) -> Result<Ket> {
    cutoff.validate()?;
    if n >= cutoff.dim() {
        return Err(Error::InvalidParams {
            reason: format!("Fock index {n} requires cutoff > {n}"),
        });
    }
    Ket::basis(cutoff.dim(), n)
}

/// Norm deficit 1 - sum |c_n|^2 of the truncated coherent expansion, before
/// renormalization.
pub fn coherent_deficit(alpha: Complex64, cutoff: FockCutoff) -> f64 {
    let d = cutoff.dim();
    let mut amp = (-alpha.norm_sqr() / 2.0).exp();
    let mut total = amp * amp;
    for n in 1..d {
        amp *= alpha.norm() / (n as f64).sqrt();
        total += amp * amp;
    }
    1.0 - total
}

/// Coherent state |alpha>, renormalized after truncation.
///
/// A truncation deficit above the warn threshold is logged; above the error
/// threshold construction fails.
pub fn coherent_state(alpha: Complex64, cutoff: FockCutoff) -> Result<Ket> {
    cutoff.validate()?;
    let d = cutoff.dim();
    if alpha.norm_sqr() > d as f64 / 3.0 {
        log::warn!(
            "coherent state |alpha|^2 = {:.3} is large for cutoff {d}; expect truncation loss",
            alpha.norm_sqr()
        );
    }
    let deficit = coherent_deficit(alpha, cutoff);
    if deficit > POLICY.coherent_deficit_error {
        return Err(Error::TruncationDeficit {
            deficit,
            tol: POLICY.coherent_deficit_error,
        });
    }
    if deficit > POLICY.coherent_deficit_warn {
        log::warn!(
            "coherent state truncation deficit {deficit:.3e} exceeds {:.1e}",
            POLICY.coherent_deficit_warn
        );
    }
    let mut v = CVector::zeros(d);
    let mut amp = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    v[0] = amp;
    for n in 1..d {
        amp *= alpha / (n as f64).sqrt();
        v[n] = amp;
    }
    Ket::normalized(v)
}

/// Amplitudes of a two-level state on (|g>, |e>).
#[derive(Clone, Copy, Debug)]
pub struct AtomState {
    pub c_g: Complex64,
    pub c_e: Complex64,
}

impl AtomState {
    pub fn new(c_g: Complex64, c_e: Complex64) -> Result<Self> {
        let norm2 = c_g.norm_sqr() + c_e.norm_sqr();
        if (norm2 - 1.0).abs() > POLICY.state_norm {
            return Err(Error::NotNormalized {
                norm: norm2.sqrt(),
                tol: POLICY.state_norm,
            });
        }
        Ok(AtomState { c_g, c_e })
    }
}

/// Two-level ket c_e |e> + c_g |g> in the (|e>, |g>) basis order.
pub fn atom_ket(s: AtomState) -> Ket {
    Ket::new(CVector::from_vec(vec![s.c_e, s.c_g])).expect("AtomState is normalized")
}

pub fn atom_ground() -> Ket {
    Ket::basis(2, 1).unwrap()
}

pub fn atom_excited() -> Ket {
    Ket::basis(2, 0).unwrap()
}

/// Lowest-weight collective state |N/2, -N/2> (all atoms in the ground state).
pub fn dicke_lowest(n_atoms: usize) -> Result<Ket> {
    if n_atoms < 1 {
        return Err(Error::InvalidParams {
            reason: "need at least one atom".into(),
        });
    }
    Ket::basis(n_atoms + 1, n_atoms)
}

/// Composite operator on the field (x) atom product space, in that order.
pub fn composite_op(field: &Operator, atom: &Operator) -> Result<Operator> {
    kron(field, atom)
}

/// Composite ket |field> (x) |atom>, in that order.
pub fn composite_ket(field: &Ket, atom: &Ket) -> Result<Ket> {
    field.tensor(atom)
}
