//! The four extended p-photon light-matter Hamiltonians, built from a single
//! parameter record.
//!
//! All frequencies are in units of the cavity frequency omega_a and times in
//! units of 1/omega_a (hbar = 1). Single-atom models couple a truncated Fock
//! mode to a two-level atom; the collective models couple it to N atoms in
//! the symmetric j = N/2 subspace.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{kron, Ket, Operator};
use crate::operators::{
    annihilation, atom_ground, collective_spin, dicke_lowest, number_operator, pauli_ops,
    FockCutoff,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Rabi,
    #[serde(rename = "JC")]
    Jc,
    Dicke,
    #[serde(rename = "TC")]
    Tc,
}

impl ModelKind {
    /// Rotating-wave kinds couple through a†^p sigma- + sigma+ a^p.
    pub fn is_rotating_wave(self) -> bool {
        matches!(self, ModelKind::Jc | ModelKind::Tc)
    }

    pub fn is_collective(self) -> bool {
        matches!(self, ModelKind::Dicke | ModelKind::Tc)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Rabi => write!(f, "Rabi"),
            ModelKind::Jc => write!(f, "JC"),
            ModelKind::Dicke => write!(f, "Dicke"),
            ModelKind::Tc => write!(f, "TC"),
        }
    }
}

/// Parameters of one Hamiltonian.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ModelParams {
    pub kind: ModelKind,
    /// Cavity frequency (the frequency unit; 1 by convention).
    pub omega_a: f64,
    /// Atomic transition frequency.
    pub omega_0: f64,
    /// Dipole coupling strength.
    pub g: f64,
    /// Kerr nonlinearity strength.
    #[serde(rename = "U")]
    pub kerr: f64,
    /// Dispersive atom-field coupling strength.
    #[serde(rename = "gamma")]
    pub dispersive: f64,
    /// Photons exchanged per atomic transition.
    pub p: usize,
    /// Atom count; must be 1 for the single-atom kinds.
    #[serde(rename = "N")]
    pub n_atoms: usize,
    pub cutoff: FockCutoff,
}

impl ModelParams {
    /// The parameter set used by all shipped experiments: resonant cavity,
    /// U = 0.1 omega_a, gamma = 0.2 omega_a. The coupling g = 0.05 omega_a is
    /// an assumption recorded in the shipped configs; limits quoted in
    /// g^-1 time units are independent of its value.
    pub fn defaults(kind: ModelKind) -> Self {
        ModelParams {
            kind,
            omega_a: 1.0,
            omega_0: 1.0,
            g: 0.05,
            kerr: 0.1,
            dispersive: 0.2,
            p: 1,
            n_atoms: if kind.is_collective() { 10 } else { 1 },
            cutoff: FockCutoff(30),
        }
    }

    pub fn with_p(mut self, p: usize) -> Self {
        self.p = p;
        self
    }

    pub fn with_cutoff(mut self, d: usize) -> Self {
        self.cutoff = FockCutoff(d);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.cutoff.validate()?;
        if self.p < 1 {
            return Err(Error::InvalidParams {
                reason: "p must be at least 1".into(),
            });
        }
        if !self.kind.is_collective() && self.n_atoms != 1 {
            return Err(Error::InvalidParams {
                reason: format!("{} model requires N = 1, got {}", self.kind, self.n_atoms),
            });
        }
        if self.kind.is_collective() && self.n_atoms < 1 {
            return Err(Error::InvalidParams {
                reason: "collective models need at least one atom".into(),
            });
        }
        if self.cutoff.dim() < self.p + 2 {
            return Err(Error::InvalidParams {
                reason: format!(
                    "cutoff {} too small for p = {}; need at least p + 2",
                    self.cutoff.dim(),
                    self.p
                ),
            });
        }
        for (name, v) in [
            ("omega_a", self.omega_a),
            ("omega_0", self.omega_0),
            ("g", self.g),
            ("U", self.kerr),
            ("gamma", self.dispersive),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParams {
                    reason: format!("{name} must be finite"),
                });
            }
        }
        Ok(())
    }

    pub fn atom_dim(&self) -> usize {
        if self.kind.is_collective() {
            self.n_atoms + 1
        } else {
            2
        }
    }

    pub fn total_dim(&self) -> usize {
        self.cutoff.dim() * self.atom_dim()
    }

    /// All-ground atomic ket for this model: |g> or |N/2, -N/2>.
    pub fn ground_atom(&self) -> Result<Ket> {
        if self.kind.is_collective() {
            dicke_lowest(self.n_atoms)
        } else {
            Ok(atom_ground())
        }
    }
}

struct AtomOps {
    /// Bare atomic energy term including its frequency prefactor:
    /// (omega_0/2) sigma_z or omega_0 J_z.
    energy: Operator,
    lower: Operator,
    raise: Operator,
    /// Operator entering the dispersive coupling: sigma_z or J_z.
    z: Operator,
}

fn atom_ops(params: &ModelParams) -> Result<AtomOps> {
    if params.kind.is_collective() {
        let j = collective_spin(params.n_atoms)?;
        Ok(AtomOps {
            energy: j.z.scale(params.omega_0.into()),
            lower: j.minus,
            raise: j.plus,
            z: j.z,
        })
    } else {
        let p = pauli_ops();
        Ok(AtomOps {
            energy: p.z.scale((params.omega_0 / 2.0).into()),
            lower: p.minus,
            raise: p.plus,
            z: p.z,
        })
    }
}

/// Build the full Hamiltonian on the field (x) atom product space.
pub fn build_hamiltonian(params: &ModelParams) -> Result<Operator> {
    params.validate()?;
    let a = annihilation(params.cutoff)?;
    let n_op = number_operator(params.cutoff)?;
    let a_p = a.pow(params.p);
    let ad_p = a_p.adjoint();
    let atom = atom_ops(params)?;
    let id_field = Operator::identity(params.cutoff.dim());
    let id_atom = Operator::identity(params.atom_dim());

    // U/2 a†² a² is diagonal with entries n(n-1)/2 * U, built exactly.
    let kerr_diag: Vec<f64> = (0..params.cutoff.dim())
        .map(|n| params.kerr / 2.0 * (n * n.saturating_sub(1)) as f64)
        .collect();
    let kerr_field = Operator::from_diagonal_real(&kerr_diag);

    let coupling = if params.kind.is_rotating_wave() {
        &kron(&ad_p, &atom.lower)? + &kron(&a_p, &atom.raise)?
    } else {
        kron(&(&ad_p + &a_p), &(&atom.lower + &atom.raise))?
    };

    let h = &(&(&kron(&n_op, &id_atom)?.scale(params.omega_a.into())
        + &kron(&id_field, &atom.energy)?)
        + &(&coupling.scale(params.g.into()) + &kron(&kerr_field, &id_atom)?))
        + &kron(&n_op, &atom.z)?.scale(params.dispersive.into());

    Operator::hermitian(h.into_matrix())
}

/// Derivative of the Hamiltonian with respect to the coupling g: the bare
/// coupling operator.
pub fn coupling_operator(params: &ModelParams) -> Result<Operator> {
    params.validate()?;
    let a = annihilation(params.cutoff)?;
    let a_p = a.pow(params.p);
    let ad_p = a_p.adjoint();
    let atom = atom_ops(params)?;
    let op = if params.kind.is_rotating_wave() {
        &kron(&ad_p, &atom.lower)? + &kron(&a_p, &atom.raise)?
    } else {
        kron(&(&ad_p + &a_p), &(&atom.lower + &atom.raise))?
    };
    Operator::hermitian(op.into_matrix())
}

/// Total excitation operator conserved by the rotating-wave kinds:
/// a†a + p |e><e| for JC, a†a + p (J_z + N/2) for TC.
pub fn total_excitation(params: &ModelParams) -> Result<Operator> {
    params.validate()?;
    if !params.kind.is_rotating_wave() {
        return Err(Error::InvalidParams {
            reason: format!("{} does not conserve the total excitation number", params.kind),
        });
    }
    let n_op = number_operator(params.cutoff)?;
    let id_field = Operator::identity(params.cutoff.dim());
    let id_atom = Operator::identity(params.atom_dim());
    let excitation_atom = if params.kind.is_collective() {
        let j = collective_spin(params.n_atoms)?;
        &j.z + &id_atom.scale((params.n_atoms as f64 / 2.0).into())
    } else {
        let p = pauli_ops();
        &p.plus * &p.minus
    };
    let op = &kron(&n_op, &id_atom)?
        + &kron(&id_field, &excitation_atom)?.scale((params.p as f64).into());
    Operator::hermitian(op.into_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{commutator, CMatrix};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn decoupled_jc_is_diagonal_with_known_spectrum() {
        let mut params = ModelParams::defaults(ModelKind::Jc).with_cutoff(6);
        params.g = 0.0;
        params.kerr = 0.0;
        params.dispersive = 0.0;
        let h = build_hamiltonian(&params).unwrap();
        for i in 0..h.dim() {
            for j in 0..h.dim() {
                if i != j {
                    assert!(h.matrix()[(i, j)].norm() == 0.0);
                }
            }
        }
        // basis index = n * 2 + s with s = 0 -> |e>, s = 1 -> |g>
        for n in 0..6 {
            let up = h.matrix()[(2 * n, 2 * n)].re;
            let down = h.matrix()[(2 * n + 1, 2 * n + 1)].re;
            assert!((up - (n as f64 + 0.5)).abs() <= 1e-14);
            assert!((down - (n as f64 - 0.5)).abs() <= 1e-14);
        }
    }

    #[test]
    fn all_kinds_build_hermitian() {
        for kind in [ModelKind::Rabi, ModelKind::Jc, ModelKind::Dicke, ModelKind::Tc] {
            for p in [1usize, 2] {
                let params = ModelParams::defaults(kind).with_p(p).with_cutoff(12);
                let h = build_hamiltonian(&params).unwrap();
                assert!(
                    h.hermiticity_defect() <= 1e-12 * h.max_abs().max(1.0),
                    "{kind} p={p}"
                );
            }
        }
    }

    #[test]
    fn excitation_number_conserved_by_rotating_wave_kinds() {
        for kind in [ModelKind::Jc, ModelKind::Tc] {
            for p in [1usize, 2] {
                let params = ModelParams::defaults(kind).with_p(p).with_cutoff(10);
                let h = build_hamiltonian(&params).unwrap();
                let n_e = total_excitation(&params).unwrap();
                let comm = commutator(&n_e, &h).unwrap();
                assert!(comm.max_abs() <= 1e-12, "{kind} p={p}: {}", comm.max_abs());
            }
        }
    }

    #[test]
    fn dicke_single_atom_equals_rabi_after_identification() {
        // J = sigma/2 for one atom, so the Dicke gamma term carries an extra
        // factor 1/2: Dicke(gamma) matches Rabi(gamma/2), everything else equal.
        let mut dicke = ModelParams::defaults(ModelKind::Dicke).with_cutoff(8);
        dicke.n_atoms = 1;
        let mut rabi = ModelParams::defaults(ModelKind::Rabi).with_cutoff(8);
        rabi.dispersive = dicke.dispersive / 2.0;
        let hd = build_hamiltonian(&dicke).unwrap();
        let hr = build_hamiltonian(&rabi).unwrap();
        assert!(hd.max_abs_diff(&hr) <= 1e-14);
    }

    #[test]
    fn textbook_single_photon_block() {
        // p = 1, U = gamma = 0, cutoff 3: hand-coded matrix in the
        // field (x) atom basis ordering |n> (x) {|e>, |g>}.
        let mut params = ModelParams::defaults(ModelKind::Jc).with_cutoff(3);
        params.kerr = 0.0;
        params.dispersive = 0.0;
        let (w, w0, g) = (params.omega_a, params.omega_0, params.g);
        let h = build_hamiltonian(&params).unwrap();

        let mut expect = CMatrix::zeros(6, 6);
        let idx = |n: usize, excited: bool| n * 2 + if excited { 0 } else { 1 };
        for n in 0..3 {
            expect[(idx(n, true), idx(n, true))] = c(w * n as f64 + w0 / 2.0, 0.0);
            expect[(idx(n, false), idx(n, false))] = c(w * n as f64 - w0 / 2.0, 0.0);
        }
        // coupling g (a† sigma- + sigma+ a): <e, n-1|H|g, n> = g sqrt(n)
        for n in 1..3 {
            expect[(idx(n - 1, true), idx(n, false))] = c(g * (n as f64).sqrt(), 0.0);
            expect[(idx(n, false), idx(n - 1, true))] = c(g * (n as f64).sqrt(), 0.0);
        }
        assert!(h.max_abs_diff(&Operator::new(expect).unwrap()) <= 1e-14);
    }

    #[test]
    fn coupling_operator_forms() {
        // Rabi p=1: (a† + a) (x) sigma_x
        let params = ModelParams::defaults(ModelKind::Rabi).with_cutoff(6);
        let d = coupling_operator(&params).unwrap();
        let a = annihilation(params.cutoff).unwrap();
        let p = pauli_ops();
        let expect = kron(&(&a.adjoint() + &a), &p.x).unwrap();
        assert!(d.max_abs_diff(&expect) == 0.0);

        // JC p=2: a†² (x) sigma- + a² (x) sigma+
        let params = ModelParams::defaults(ModelKind::Jc).with_p(2).with_cutoff(6);
        let d = coupling_operator(&params).unwrap();
        let a2 = a.pow(2);
        let expect = &kron(&a2.adjoint(), &p.minus).unwrap() + &kron(&a2, &p.plus).unwrap();
        assert!(d.max_abs_diff(&expect) == 0.0);
    }

    #[test]
    fn coupling_operator_matches_finite_difference() {
        for kind in [ModelKind::Rabi, ModelKind::Jc, ModelKind::Tc] {
            let params = ModelParams::defaults(kind).with_p(2).with_cutoff(8);
            let h = 1e-6;
            let mut plus = params;
            plus.g += h;
            let mut minus = params;
            minus.g -= h;
            let hp = build_hamiltonian(&plus).unwrap();
            let hm = build_hamiltonian(&minus).unwrap();
            let fd = (&hp - &hm).scale(c(0.5 / h, 0.0));
            let exact = coupling_operator(&params).unwrap();
            assert!(fd.max_abs_diff(&exact) <= 1e-8, "{kind}");
        }
    }

    #[test]
    fn validation_rejects_bad_params() {
        let mut params = ModelParams::defaults(ModelKind::Jc);
        params.n_atoms = 3;
        assert!(params.validate().is_err());

        let params = ModelParams::defaults(ModelKind::Jc).with_p(4).with_cutoff(5);
        assert!(params.validate().is_err());

        let mut params = ModelParams::defaults(ModelKind::Rabi);
        params.omega_0 = f64::NAN;
        assert!(params.validate().is_err());
    }

    #[test]
    fn params_deserialize_with_spec_field_names() {
        let json = r#"{
            "kind": "JC", "omega_a": 1.0, "omega_0": 1.0, "g": 0.05,
            "U": 0.1, "gamma": 0.2, "p": 1, "N": 1, "cutoff": 30
        }"#;
        let params: ModelParams = serde_json::from_str(json).unwrap();
        assert_eq!(params.kind, ModelKind::Jc);
        assert_eq!(params.kerr, 0.1);
        assert_eq!(params.cutoff.dim(), 30);
    }
}
