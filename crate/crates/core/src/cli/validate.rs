//! The `validate` experiment: one run of every cross-module invariant with a
//! machine-readable pass/fail summary.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::evolution::{
    assemble_jc_state, jc_analytic_state, GroundKerrSign,
};
use crate::hilbert::{
    commutator, fidelity_pure, nested_commutator, CMatrix, CVector, DensityMatrix, Ket, Operator,
    Propagator,
};
use crate::measure::{
    detect_order, indirect_estimate, indirect_estimate_mixed, ratio_limit_numeric,
};
use crate::models::{build_hamiltonian, ModelKind, ModelParams};
use crate::operators::{
    annihilation, atom_ground, atom_ket, coherent_state, composite_ket, fock_state,
    number_operator, pauli_ops, AtomState, FockCutoff,
};
use crate::qfi::{qfi_pure, short_time_qfi_coefficient};

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub tolerance: f64,
    pub observed: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub passed: usize,
    pub failed: usize,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
}

fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> Operator {
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = random_complex(rng);
        }
    }
    let h = (&m + m.adjoint()).map(|x| x * 0.5);
    Operator::hermitian(h).unwrap()
}

fn random_field(rng: &mut ChaCha8Rng, lowest: usize, levels: usize, cutoff: FockCutoff) -> Ket {
    let mut v = CVector::zeros(cutoff.dim());
    for n in lowest..(lowest + levels) {
        v[n] = random_complex(rng);
    }
    Ket::normalized(v).unwrap()
}

fn random_atom(rng: &mut ChaCha8Rng) -> Ket {
    let c_g = random_complex(rng);
    let c_e = random_complex(rng);
    let norm = (c_g.norm_sqr() + c_e.norm_sqr()).sqrt();
    atom_ket(AtomState::new(c_g / norm, c_e / norm).unwrap())
}

struct Suite {
    checks: Vec<CheckResult>,
}

impl Suite {
    fn record(&mut self, name: &str, tolerance: f64, observed: f64, detail: impl Into<String>) {
        self.checks.push(CheckResult {
            name: name.into(),
            tolerance,
            observed,
            passed: observed <= tolerance,
            detail: detail.into(),
        });
    }

    /// For detector checks that must fire: passes when `observed > floor`.
    fn record_detection(&mut self, name: &str, floor: f64, observed: f64, detail: impl Into<String>) {
        self.checks.push(CheckResult {
            name: name.into(),
            tolerance: floor,
            observed,
            passed: observed > floor,
            detail: detail.into(),
        });
    }
}

fn check_propagator_laws(suite: &mut Suite, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut worst_unitarity = 0.0f64;
    let mut worst_norm = 0.0f64;
    let mut worst_group = 0.0f64;
    for _ in 0..6 {
        let dim = 4 + 2 * rng.random_range(0..3usize);
        let h = random_hermitian(rng, dim);
        let prop = Propagator::new(&h)?;
        let identity = Operator::identity(dim);
        for &t in &[0.0, 0.4, 2.5, 10.0] {
            let u = prop.unitary(t);
            worst_unitarity = worst_unitarity.max((&u.adjoint() * &u).max_abs_diff(&identity));
        }
        let psi = random_field(rng, 0, dim, FockCutoff(dim));
        let evolved = prop.evolve(&psi, 3.3)?;
        worst_norm = worst_norm.max((evolved.amplitudes().norm() - 1.0).abs());
        let (t1, t2) = (rng.random::<f64>() * 2.0, rng.random::<f64>() * 2.0);
        worst_group = worst_group
            .max((&prop.unitary(t1) * &prop.unitary(t2)).max_abs_diff(&prop.unitary(t1 + t2)));
    }
    suite.record("expm_unitarity", 1e-10, worst_unitarity, "max |U†U - 1| over random H, t in [0, 10]");
    suite.record("norm_preservation", 1e-10, worst_norm, "max norm drift of evolved states");
    suite.record("group_law", 1e-9, worst_group, "max |U(t1)U(t2) - U(t1+t2)|");
    Ok(())
}

fn check_commutator_algebra(suite: &mut Suite, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut worst_bilinear = 0.0f64;
    for _ in 0..10 {
        let a = random_hermitian(rng, 4);
        let b = random_hermitian(rng, 4);
        let c = random_hermitian(rng, 4);
        let alpha = random_complex(rng);
        let beta = random_complex(rng);
        let lhs = commutator(&(&a.scale(alpha) + &b.scale(beta)), &c)?;
        let rhs = &commutator(&a, &c)?.scale(alpha) + &commutator(&b, &c)?.scale(beta);
        worst_bilinear = worst_bilinear.max(lhs.max_abs_diff(&rhs));
    }
    suite.record("commutator_bilinearity", 1e-12, worst_bilinear, "random 4-dim operators and scalars");

    let mut worst_herm = 0.0f64;
    for _ in 0..4 {
        let h = random_hermitian(rng, 6);
        let a = random_hermitian(rng, 6);
        for n in 1..=4 {
            let nc = nested_commutator(&h, &a, n)?;
            worst_herm = worst_herm.max(nc.hermiticity_defect() / nc.max_abs().max(1.0));
        }
    }
    suite.record("nested_commutator_hermiticity", 1e-10, worst_herm, "orders 1..=4 on random Hermitian pairs");

    // truncated-field commutation pattern
    let d = 12;
    let a = annihilation(FockCutoff(d))?;
    let comm = commutator(&a, &a.adjoint())?;
    let mut worst_pattern = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let want = if i != j {
                0.0
            } else if i == d - 1 {
                -((d - 1) as f64)
            } else {
                1.0
            };
            worst_pattern = worst_pattern.max((comm.matrix()[(i, j)] - Complex64::new(want, 0.0)).norm());
        }
    }
    suite.record(
        "truncated_commutator_pattern",
        4.0 * f64::EPSILON * d as f64,
        worst_pattern,
        "[a, a†] = 1 with the -(d-1) truncation artifact in the last entry",
    );
    Ok(())
}

fn random_jc_params(rng: &mut ChaCha8Rng, p: usize, cutoff: usize) -> ModelParams {
    let mut params = ModelParams::defaults(ModelKind::Jc).with_p(p).with_cutoff(cutoff);
    params.omega_0 = 0.6 + 0.8 * rng.random::<f64>();
    params.g = 0.02 + 0.08 * rng.random::<f64>();
    params.kerr = 0.2 * rng.random::<f64>();
    params.dispersive = 0.3 * rng.random::<f64>();
    params
}

fn check_closed_form_dynamics(suite: &mut Suite, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut worst_block = 0.0f64;
    let mut worst_fidelity_loss = 0.0f64;
    for _ in 0..6 {
        let p = 1 + rng.random_range(0..2usize);
        let params = random_jc_params(rng, p, 14);
        let mut c = vec![Complex64::new(0.0, 0.0); 8];
        for x in c.iter_mut() {
            *x = random_complex(rng);
        }
        let norm: f64 = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in c.iter_mut() {
            *x /= norm;
        }
        let h = build_hamiltonian(&params)?;
        let field = Ket::normalized(CVector::from_iterator(
            params.cutoff.dim(),
            (0..params.cutoff.dim()).map(|n| *c.get(n).unwrap_or(&Complex64::new(0.0, 0.0))),
        ))?;
        let psi0 = composite_ket(&field, &atom_ground())?;
        for &t_coupling in &[0.3, 2.0, 5.0] {
            let t = t_coupling / params.g;
            let factors = jc_analytic_state(&c, &params, t, GroundKerrSign::Positive)?;
            for n in 0..c.len() {
                let unit = factors.excited[n].norm_sqr() + factors.ground[n].norm_sqr();
                worst_block = worst_block.max((unit - 1.0).abs());
            }
            let analytic = assemble_jc_state(&c, &factors, params.cutoff.dim())?;
            let numeric = crate::evolution::evolve(&h, &psi0, t)?;
            worst_fidelity_loss =
                worst_fidelity_loss.max(1.0 - fidelity_pure(&analytic, &numeric)?);
        }
    }
    suite.record("jc_block_unitarity", 1e-10, worst_block, "per-block |C_e|^2 + |C_g|^2 = 1");
    suite.record(
        "analytic_numeric_fidelity",
        1e-9,
        worst_fidelity_loss,
        "closed-form vs propagated state, random fields, p in {1, 2}, t <= 5/g",
    );

    // the flipped Kerr-sign transcription must be caught by the same check
    let params = ModelParams::defaults(ModelKind::Jc).with_cutoff(14);
    let c = {
        let mut v = vec![Complex64::new(0.0, 0.0); 8];
        v[6] = Complex64::new(1.0, 0.0);
        v
    };
    let field = fock_state(6, params.cutoff)?;
    let psi0 = composite_ket(&field, &atom_ground())?;
    let h = build_hamiltonian(&params)?;
    let t = 2.0 / params.g;
    let flipped = jc_analytic_state(&c, &params, t, GroundKerrSign::Negative)?;
    let numeric = crate::evolution::evolve(&h, &psi0, t)?;
    let assembled = assemble_jc_state(&c, &flipped, params.cutoff.dim())?;
    let mismatch = 1.0 - fidelity_pure(&assembled, &numeric)?;
    // locate the block with the largest amplitude deviation
    let good = jc_analytic_state(&c, &params, t, GroundKerrSign::Positive)?;
    let worst_n = (0..c.len())
        .max_by(|&i, &j| {
            let di = (flipped.ground[i] - good.ground[i]).norm() * c[i].norm();
            let dj = (flipped.ground[j] - good.ground[j]).norm() * c[j].norm();
            di.partial_cmp(&dj).unwrap()
        })
        .unwrap();
    suite.record_detection(
        "kerr_sign_mutation_detected",
        1e-4,
        mismatch,
        format!("flipped ground-branch Kerr sign mismatches the propagator; worst block n = {worst_n}"),
    );
    Ok(())
}

fn check_ratio_consistency(suite: &mut Suite, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut worst_excess = 0.0f64;
    let mut produced = 0usize;
    let mut orders_seen = [0usize; 2];
    let mut attempts = 0usize;
    while produced < 50 && attempts < 500 {
        attempts += 1;
        let rotating = rng.random::<bool>();
        let kind = if rotating { ModelKind::Jc } else { ModelKind::Rabi };
        let p = 1 + rng.random_range(0..2usize);
        let mut params = random_jc_params(rng, p, 12);
        params.kind = kind;
        let h = build_hamiltonian(&params)?;
        let sz = crate::hilbert::kron(&Operator::identity(params.cutoff.dim()), &pauli_ops().z)?;

        // ground atoms give second order; complex atoms with the
        // photon-number readout give first order
        let first_order = rng.random::<bool>() && kind == ModelKind::Jc && p == 1;
        let (a, target, reference) = if first_order {
            let n_obs = crate::hilbert::kron(
                &number_operator(params.cutoff)?,
                &Operator::identity(2),
            )?;
            let target = composite_ket(&random_field(rng, 0, 5, params.cutoff), &random_atom(rng))?;
            let reference = composite_ket(&random_field(rng, 0, 5, params.cutoff), &random_atom(rng))?;
            (n_obs, target, reference)
        } else {
            let target = composite_ket(&random_field(rng, p, 5, params.cutoff), &atom_ground())?;
            let reference = composite_ket(&random_field(rng, p, 5, params.cutoff), &atom_ground())?;
            (sz, target, reference)
        };
        let detection = match detect_order(&h, &a, &target, &reference, 2) {
            Ok(d) => d,
            Err(_) => continue, // mismatch or vanishing instance: resample
        };
        let exact = detection.target_value / detection.reference_value;
        let numeric = match ratio_limit_numeric(&h, &a, &target, &reference, None, 6) {
            Ok(n) => n,
            Err(_) => continue,
        };
        let allowed = numeric.error_estimate.max(1e-6) * exact.abs().max(1.0);
        let excess = (numeric.ratio - exact).abs() / allowed;
        worst_excess = worst_excess.max(excess);
        orders_seen[detection.order - 1] += 1;
        produced += 1;
    }
    suite.record(
        "ratio_consistency_randomized",
        1.0,
        worst_excess,
        format!(
            "|numeric - exact| / max(error_estimate, 1e-6) over {produced} instances (orders 1/2: {}/{})",
            orders_seen[0], orders_seen[1]
        ),
    );
    Ok(())
}

fn check_mixed_pure_agreement(suite: &mut Suite) -> Result<()> {
    let params = ModelParams::defaults(ModelKind::Jc).with_cutoff(16);
    let h = build_hamiltonian(&params)?;
    let sz = crate::hilbert::kron(&Operator::identity(params.cutoff.dim()), &pauli_ops().z)?;
    let target = composite_ket(&fock_state(6, params.cutoff)?, &atom_ground())?;
    let reference = composite_ket(&fock_state(3, params.cutoff)?, &atom_ground())?;
    let pure = indirect_estimate(&h, &sz, &target, &reference, None)?;
    let mixed = indirect_estimate_mixed(
        &h,
        &sz,
        &DensityMatrix::pure(&target),
        &DensityMatrix::pure(&reference),
        None,
    )?;
    suite.record(
        "mixed_pure_agreement",
        1e-10,
        (pure.estimate - mixed.estimate).abs() / pure.estimate.abs().max(1.0),
        "indirect estimate via kets vs pure density matrices",
    );
    Ok(())
}

fn ratio_curve_config(cutoff: usize, out: &std::path::Path) -> super::ExperimentConfig {
    use super::config::{GridSpacing, TimeGrid};
    super::ExperimentConfig {
        experiment: super::ExperimentKind::RatioCurves,
        model: ModelParams::defaults(ModelKind::Jc).with_cutoff(cutoff),
        target_state: super::StateSpec::Fock { n: 4 },
        reference_state: super::StateSpec::Fock { n: 2 },
        observable: super::Observable::SigmaZ,
        time_grid: TimeGrid {
            t_min: 1e-4,
            t_max: 1e-1,
            points: 25,
            spacing: GridSpacing::Log,
        },
        output_dir: out.to_path_buf(),
        assumptions: None,
    }
}

fn check_csv_determinism(suite: &mut Suite) -> Result<()> {
    let dir = tempfile::tempdir()?;
    let run = |sub: &str| -> Result<(Vec<u8>, Vec<u8>)> {
        let out = dir.path().join(sub);
        let config = ratio_curve_config(12, &out);
        super::experiments::run_ratio_curves(&config, &super::RunOptions::default())?;
        Ok((
            std::fs::read(out.join("curves.csv"))?,
            std::fs::read(out.join("limits.json"))?,
        ))
    };
    let (csv1, limits1) = run("a")?;
    let (csv2, limits2) = run("b")?;
    let identical = csv1 == csv2 && limits1 == limits2;
    suite.record(
        "csv_determinism",
        0.0,
        if identical { 0.0 } else { 1.0 },
        "byte-identical curves.csv and limits.json across repeated runs",
    );
    Ok(())
}

fn coherent_ratio_drift(base_cutoff: usize, grown_cutoff: usize) -> Result<f64> {
    use crate::measure::ratio_limit_numeric_with;
    let setup = |cutoff: usize| -> Result<(Propagator, Operator, Ket, Ket)> {
        let params = ModelParams::defaults(ModelKind::Jc).with_p(2).with_cutoff(cutoff);
        let h = build_hamiltonian(&params)?;
        let sz = crate::hilbert::kron(&Operator::identity(params.cutoff.dim()), &pauli_ops().z)?;
        let alpha = coherent_state(Complex64::new(6f64.sqrt(), 0.0), params.cutoff)?;
        let target = composite_ket(&alpha, &atom_ground())?;
        let reference = composite_ket(&fock_state(3, params.cutoff)?, &atom_ground())?;
        Ok((Propagator::new(&h)?, sz, target, reference))
    };
    let base = setup(base_cutoff)?;
    let grown = setup(grown_cutoff)?;
    // one shared ladder keeps the comparison apples-to-apples and its deepest
    // rung above the underflow guard at both cutoffs
    let t0 = 0.4 / base.0.spectral_radius().max(grown.0.spectral_radius());
    let run = |s: &(Propagator, Operator, Ket, Ket)| -> Result<f64> {
        Ok(ratio_limit_numeric_with(&s.0, &s.1, &s.2, &s.3, Some(t0), 6)?.ratio)
    };
    Ok((run(&base)? - run(&grown)?).abs())
}

fn check_convergence_policy(suite: &mut Suite) -> Result<()> {
    // at the shipped cutoffs the coherent limit must be insensitive to growth
    let drift = coherent_ratio_drift(60, 90)?;
    suite.record(
        "convergence_at_policy_cutoffs",
        1e-6,
        drift,
        "coherent sqrt(6) p=2 limit, cutoff 60 vs 90",
    );
    // and the detector must fire when the cutoff is under-resolved
    let drift = coherent_ratio_drift(20, 30)?;
    suite.record_detection(
        "convergence_detector_sensitivity",
        1e-6,
        drift,
        "under-resolved coherent run must show measurable drift",
    );
    Ok(())
}

fn check_qfi_invariants(suite: &mut Suite, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut most_negative = 0.0f64;
    let mut worst_onset = 0.0f64;
    for _ in 0..4 {
        let params = random_jc_params(rng, 1, 12);
        let field = random_field(rng, 0, 6, params.cutoff);
        let atom = random_atom(rng);
        let psi = composite_ket(&field, &atom)?;
        for &t_coupling in &[0.3, 1.5] {
            let f = qfi_pure(&params, &psi, t_coupling / params.g, None)?;
            most_negative = most_negative.max(-f.f);
        }
        // quadratic onset at t = 5e-4 / g against the exact coefficient
        let coeff = short_time_qfi_coefficient(&params, &psi)?;
        if coeff > 1e-6 {
            let t = 5e-4 / params.g;
            let f = qfi_pure(&params, &psi, t, None)?;
            worst_onset = worst_onset.max((f.f / (4.0 * coeff * t * t) - 1.0).abs());
        }
    }
    suite.record("qfi_nonnegativity", 1e-8, most_negative, "-min F over random states and times");
    suite.record(
        "qfi_quadratic_onset",
        0.01,
        worst_onset,
        "F(t) / (4 Var t^2) - 1 at t = 5e-4/g over random product states",
    );
    Ok(())
}

fn check_reference_independence(suite: &mut Suite) -> Result<()> {
    let params = ModelParams::defaults(ModelKind::Jc).with_cutoff(30);
    let h = build_hamiltonian(&params)?;
    let sz = crate::hilbert::kron(&Operator::identity(params.cutoff.dim()), &pauli_ops().z)?;
    let target = composite_ket(&fock_state(6, params.cutoff)?, &atom_ground())?;

    let ref_fock = composite_ket(&fock_state(3, params.cutoff)?, &atom_ground())?;
    let est_fock = indirect_estimate(&h, &sz, &target, &ref_fock, Some(3.0))?;

    let alpha = coherent_state(Complex64::new(1.0, 0.0), params.cutoff)?;
    let alpha_mean = crate::hilbert::expectation_real(&alpha, &number_operator(params.cutoff)?)?;
    let ref_coherent = composite_ket(&alpha, &atom_ground())?;
    let est_coherent = indirect_estimate(&h, &sz, &target, &ref_coherent, Some(alpha_mean))?;

    suite.record(
        "reference_independence",
        1e-6,
        (est_fock.estimate - est_coherent.estimate).abs(),
        "photon-number estimate with |3> vs |alpha=1> references",
    );
    Ok(())
}

fn check_ladder_scale_invariance(suite: &mut Suite) -> Result<()> {
    let params = ModelParams::defaults(ModelKind::Jc).with_cutoff(30);
    let h = build_hamiltonian(&params)?;
    let sz = crate::hilbert::kron(&Operator::identity(params.cutoff.dim()), &pauli_ops().z)?;
    let target = composite_ket(&fock_state(6, params.cutoff)?, &atom_ground())?;
    let reference = composite_ket(&fock_state(3, params.cutoff)?, &atom_ground())?;
    let base = ratio_limit_numeric(&h, &sz, &target, &reference, None, 6)?;
    let prop = Propagator::new(&h)?;
    let t0 = crate::policy::DEFAULT_LADDER_SCALE / prop.spectral_radius() * 0.1;
    // 4 levels keep the deepest rung above the underflow guard; the allowed
    // shift is floored at the Richardson roundoff level
    let shrunk = ratio_limit_numeric(&h, &sz, &target, &reference, Some(t0), 4)?;
    let floor = 1e-10 * base.ratio.abs().max(1.0);
    let allowed = base.error_estimate.max(shrunk.error_estimate).max(floor);
    suite.record(
        "ladder_scale_invariance",
        1.0,
        (base.ratio - shrunk.ratio).abs() / allowed,
        "ratio shift under a 10x smaller ladder vs the reported error estimate",
    );
    Ok(())
}

/// Run every invariant suite; `seed` drives the randomized instances.
pub fn run_validate(seed: u64) -> Result<ValidationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut suite = Suite { checks: Vec::new() };

    check_propagator_laws(&mut suite, &mut rng)?;
    check_commutator_algebra(&mut suite, &mut rng)?;
    check_closed_form_dynamics(&mut suite, &mut rng)?;
    check_ratio_consistency(&mut suite, &mut rng)?;
    check_mixed_pure_agreement(&mut suite)?;
    check_csv_determinism(&mut suite)?;
    check_convergence_policy(&mut suite)?;
    check_qfi_invariants(&mut suite, &mut rng)?;
    check_reference_independence(&mut suite)?;
    check_ladder_scale_invariance(&mut suite)?;

    let passed = suite.checks.iter().filter(|c| c.passed).count();
    let failed = suite.checks.len() - passed;
    Ok(ValidationReport {
        seed,
        checks: suite.checks,
        passed,
        failed,
    })
}
