//! Pure-state quantum Fisher information of the evolved state, its
//! short-time variance limit, and the indirect estimate calibrated by a
//! reference state.
//!
//! The parameter derivative of the state is taken by a central finite
//! difference in the coupling g, with a common-phase alignment before
//! differencing. The QFI is phase-convention independent, so the alignment
//! only improves conditioning.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{kron, CVector, Ket, Operator, Propagator};
use crate::measure::ratio_limit_numeric;
use crate::models::{build_hamiltonian, coupling_operator, ModelKind, ModelParams};
use crate::operators::pauli_ops;
use crate::policy::{DEFAULT_COUPLING_STEP, DEFAULT_EXTRAPOLATION_LEVELS, POLICY};

/// Hamiltonian parameter a derivative can be requested for. Only the
/// coupling is in scope; the other selectors exist so that the rejection
/// path is explicit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelParameter {
    Coupling,
    CavityFrequency,
    AtomFrequency,
    Kerr,
    Dispersive,
}

impl ModelParameter {
    fn name(self) -> &'static str {
        match self {
            ModelParameter::Coupling => "g",
            ModelParameter::CavityFrequency => "omega_a",
            ModelParameter::AtomFrequency => "omega_0",
            ModelParameter::Kerr => "U",
            ModelParameter::Dispersive => "gamma",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QfiMethod {
    FiniteDifference,
    ShortTimeLimit,
    Indirect,
}

/// One quantum Fisher information value.
#[derive(Clone, Debug, Serialize)]
pub struct QfiResult {
    /// Parameter identifier; always "g" in scope.
    pub lambda: String,
    pub t: f64,
    pub f: f64,
    pub method: QfiMethod,
}

/// Finite-difference engine holding the three propagators at g, g + h, g - h
/// so that a whole time curve reuses the eigendecompositions.
pub struct QfiEvaluator {
    center: Propagator,
    plus: Propagator,
    minus: Propagator,
    h: f64,
}

impl QfiEvaluator {
    pub fn for_params(params: &ModelParams, lambda: ModelParameter, h: Option<f64>) -> Result<Self> {
        params.validate()?;
        if lambda != ModelParameter::Coupling {
            return Err(Error::UnsupportedParameter {
                name: lambda.name().into(),
            });
        }
        let h = h.unwrap_or(DEFAULT_COUPLING_STEP * params.g.abs().max(1.0));
        if h <= 0.0 {
            return Err(Error::InvalidParams {
                reason: "finite-difference step must be positive".into(),
            });
        }
        let mut plus = *params;
        plus.g += h;
        let mut minus = *params;
        minus.g -= h;
        Self::from_hamiltonians(
            &build_hamiltonian(params)?,
            &build_hamiltonian(&plus)?,
            &build_hamiltonian(&minus)?,
            h,
        )
    }

    /// Build from an arbitrary parameter family H(lambda), H(lambda + h),
    /// H(lambda - h).
    pub fn from_hamiltonians(
        center: &Operator,
        plus: &Operator,
        minus: &Operator,
        h: f64,
    ) -> Result<Self> {
        if h <= 0.0 {
            return Err(Error::InvalidParams {
                reason: "finite-difference step must be positive".into(),
            });
        }
        Ok(QfiEvaluator {
            center: Propagator::new(center)?,
            plus: Propagator::new(plus)?,
            minus: Propagator::new(minus)?,
            h,
        })
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn center_spectral_radius(&self) -> f64 {
        self.center.spectral_radius()
    }

    fn aligned(psi_center: &Ket, psi: Ket) -> CVector {
        let overlap = psi_center.inner(&psi).expect("dims agree");
        let amps = psi.amplitudes().clone();
        if overlap.norm() == 0.0 {
            return amps;
        }
        let phase = overlap.conj() / overlap.norm();
        amps.map(|x| x * phase)
    }

    /// Central-difference derivative of the evolved state with respect to
    /// the parameter (unnormalized vector).
    pub fn derivative_state(&self, psi0: &Ket, t: f64) -> Result<CVector> {
        let center = self.center.evolve(psi0, t)?;
        let plus = Self::aligned(&center, self.plus.evolve(psi0, t)?);
        let minus = Self::aligned(&center, self.minus.evolve(psi0, t)?);
        Ok((plus - minus).map(|x| x / Complex64::new(2.0 * self.h, 0.0)))
    }

    /// F(t) = 4 [ <d|d> - |<psi(t)|d>|^2 ].
    pub fn qfi(&self, psi0: &Ket, t: f64) -> Result<f64> {
        let center = self.center.evolve(psi0, t)?;
        let d = self.derivative_state(psi0, t)?;
        let dd = d.dotc(&d).re;
        let overlap = center.amplitudes().dotc(&d);
        Ok(4.0 * (dd - overlap.norm_sqr()))
    }
}

/// One-shot parameter derivative of the evolved state, validated by halving
/// the step: the two estimates must agree to O(h^2) or the step is rejected.
pub fn d_lambda_state(
    params: &ModelParams,
    lambda: ModelParameter,
    psi0: &Ket,
    t: f64,
    h: f64,
) -> Result<CVector> {
    let evaluator = QfiEvaluator::for_params(params, lambda, Some(h))?;
    let coarse = evaluator.derivative_state(psi0, t)?;
    let fine =
        QfiEvaluator::for_params(params, lambda, Some(h / 2.0))?.derivative_state(psi0, t)?;
    let residual = (&coarse - &fine).norm();
    // the O(h^2) coefficient grows with the third parameter derivative of
    // the evolved state, which scales like (t ||H||)^2 relative to the
    // first derivative
    let dynamics = t * evaluator.center_spectral_radius();
    let allowed = 10.0 * h * h * fine.norm().max(1.0) * (1.0 + dynamics * dynamics);
    if residual > allowed {
        return Err(Error::StepInconsistent {
            h,
            residual,
            allowed,
        });
    }
    Ok(coarse)
}

/// Quantum Fisher information of the coupling at time t (native units).
pub fn qfi_pure(params: &ModelParams, psi0: &Ket, t: f64, h: Option<f64>) -> Result<QfiResult> {
    let eval = QfiEvaluator::for_params(params, ModelParameter::Coupling, h)?;
    let f = eval.qfi(psi0, t)?;
    Ok(QfiResult {
        lambda: "g".into(),
        t,
        f,
        method: QfiMethod::FiniteDifference,
    })
}

/// Quadratic-onset coefficient of the QFI: F(t) = 4 c t^2 + O(t^4) with
/// `c = <M^2> - Re<M>^2 + Im<M>^2` for `M = dH/dg`. For the Hermitian M at hand
/// the imaginary part of the mean vanishes and c is the variance.
pub fn short_time_qfi_coefficient(params: &ModelParams, psi: &Ket) -> Result<f64> {
    let m = coupling_operator(params)?;
    if psi.dim() != m.dim() {
        return Err(Error::ShapeMismatch {
            left: psi.dim(),
            right: m.dim(),
        });
    }
    let m_psi = m.matrix() * psi.amplitudes();
    let second_moment = m_psi.dotc(&m_psi).re;
    let mean = psi.amplitudes().dotc(&m_psi);
    Ok(second_moment - mean.re * mean.re + mean.im * mean.im)
}

/// Exact t -> 0 limit of the QFI ratio: the ratio of coupling-derivative
/// variances in the two initial states.
pub fn qfi_short_time_ratio(params: &ModelParams, psi0: &Ket, psir0: &Ket) -> Result<f64> {
    let target = short_time_qfi_coefficient(params, psi0)?;
    let reference = short_time_qfi_coefficient(params, psir0)?;
    if reference.abs() < POLICY.degenerate_reference {
        return Err(Error::DegenerateReference {
            value: reference,
            tol: POLICY.degenerate_reference,
        });
    }
    Ok(target / reference)
}

/// Indirect QFI of the target at t0: reference QFI at t0 times the measured
/// atomic-energy change ratio at t0. Only the single-atom kinds support the
/// sigma_z readout. The extrapolation error of the ratio ladder must be
/// within the validated short-time window.
pub fn qfi_indirect(
    params: &ModelParams,
    psi0: &Ket,
    psir0: &Ket,
    t0: f64,
) -> Result<QfiResult> {
    params.validate()?;
    if params.kind.is_collective() {
        return Err(Error::InvalidParams {
            reason: format!("sigma_z readout needs a single-atom kind, got {}", params.kind),
        });
    }
    if params.kind != ModelKind::Jc && params.kind != ModelKind::Rabi {
        return Err(Error::InvalidParams {
            reason: "indirect QFI supports the Rabi and JC kinds".into(),
        });
    }
    let h_op = build_hamiltonian(params)?;
    let sigma_z = kron(&Operator::identity(params.cutoff.dim()), &pauli_ops().z)?;
    let ladder = ratio_limit_numeric(
        &h_op,
        &sigma_z,
        psi0,
        psir0,
        None,
        DEFAULT_EXTRAPOLATION_LEVELS,
    )?;
    if ladder.error_estimate > POLICY.short_time_window {
        return Err(Error::OutsideShortTimeWindow {
            t0,
            error_estimate: ladder.error_estimate,
            tol: POLICY.short_time_window,
        });
    }
    let prop = Propagator::new(&h_op)?;
    let target = crate::evolution::DeltaEvaluator::new(&prop, &sigma_z, psi0)?;
    let reference = crate::evolution::DeltaEvaluator::new(&prop, &sigma_z, psir0)?;
    let ratio_at_t0 = target.delta(t0) / reference.delta(t0);
    let f_reference = qfi_pure(params, psir0, t0, None)?;
    Ok(QfiResult {
        lambda: "g".into(),
        t: t0,
        f: ratio_at_t0 * f_reference.f,
        method: QfiMethod::Indirect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{
        atom_excited, atom_ground, coherent_state, composite_ket, fock_state, number_operator,
        FockCutoff,
    };

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn jc(p: usize, cutoff: usize) -> ModelParams {
        ModelParams::defaults(ModelKind::Jc).with_p(p).with_cutoff(cutoff)
    }

    fn ground_product(n: usize, params: &ModelParams) -> Ket {
        composite_ket(&fock_state(n, params.cutoff).unwrap(), &atom_ground()).unwrap()
    }

    fn excited_product(n: usize, params: &ModelParams) -> Ket {
        composite_ket(&fock_state(n, params.cutoff).unwrap(), &atom_excited()).unwrap()
    }

    #[test]
    fn derivative_vanishes_at_zero_time() {
        let params = jc(1, 20);
        let psi = ground_product(6, &params);
        let eval = QfiEvaluator::for_params(&params, ModelParameter::Coupling, None).unwrap();
        let d = eval.derivative_state(&psi, 0.0).unwrap();
        assert!(d.norm() <= 1e-9, "norm = {:.3e}", d.norm());
    }

    #[test]
    fn qfi_zero_at_zero_time() {
        let params = jc(1, 20);
        let psi = ground_product(6, &params);
        let out = qfi_pure(&params, &psi, 0.0, None).unwrap();
        assert!(out.f.abs() <= 1e-10, "F(0) = {:.3e}", out.f);
    }

    #[test]
    fn decoupled_initial_state_has_zero_qfi() {
        // |1> (x) |g> is stationary for p = 2: the coupling never acts
        let params = jc(2, 16);
        let psi = ground_product(1, &params);
        let out = qfi_pure(&params, &psi, 0.8, None).unwrap();
        assert!(out.f.abs() <= 1e-8, "F = {:.3e}", out.f);
    }

    #[test]
    fn rejects_out_of_scope_parameters() {
        let params = jc(1, 10);
        let psi = ground_product(2, &params);
        for lambda in [
            ModelParameter::CavityFrequency,
            ModelParameter::AtomFrequency,
            ModelParameter::Kerr,
            ModelParameter::Dispersive,
        ] {
            let err = d_lambda_state(&params, lambda, &psi, 0.1, 1e-5).unwrap_err();
            assert!(matches!(err, Error::UnsupportedParameter { .. }));
        }
    }

    #[test]
    fn step_halving_is_richardson_consistent() {
        // run in a regime where the O(h^2) truncation dominates roundoff
        let params = jc(1, 20);
        let psi = ground_product(5, &params);
        let t = 1.0 / params.g;
        let h = 1e-3;
        let d1 = QfiEvaluator::for_params(&params, ModelParameter::Coupling, Some(h))
            .unwrap()
            .derivative_state(&psi, t)
            .unwrap();
        let d2 = QfiEvaluator::for_params(&params, ModelParameter::Coupling, Some(h / 2.0))
            .unwrap()
            .derivative_state(&psi, t)
            .unwrap();
        let d4 = QfiEvaluator::for_params(&params, ModelParameter::Coupling, Some(h / 4.0))
            .unwrap()
            .derivative_state(&psi, t)
            .unwrap();
        let r1 = (&d1 - &d2).norm();
        let r2 = (&d2 - &d4).norm();
        assert!(
            r2 <= r1 / 3.0,
            "halving should shrink the residual ~4x: {r1:.3e} -> {r2:.3e}"
        );
        // and the validated one-shot accepts the step
        assert!(d_lambda_state(&params, ModelParameter::Coupling, &psi, t, h).is_ok());
    }

    #[test]
    fn quadratic_onset_coefficient_for_number_state() {
        // Var(dH/dg) = n on |n> (x) |g> for p = 1, so F(t)/t^2 -> 4n
        let params = jc(1, 30);
        let psi = ground_product(6, &params);
        let coeff = short_time_qfi_coefficient(&params, &psi).unwrap();
        assert!((coeff - 6.0).abs() <= 1e-12, "coeff = {coeff}");
        let t = 1e-3 / params.g;
        let out = qfi_pure(&params, &psi, t, None).unwrap();
        let ratio = out.f / (t * t);
        assert!(
            (ratio - 24.0).abs() <= 0.02 * 24.0,
            "F/t^2 = {ratio} vs 24"
        );
    }

    #[test]
    fn phase_generator_closed_form() {
        // H(lambda) = lambda a†a on a coherent state: F(t) = 4 t^2 |alpha|^2
        let cut = FockCutoff(40);
        let n_op = number_operator(cut).unwrap();
        let lambda = 0.7;
        let h = 1e-5;
        let build = |l: f64| n_op.scale(c64(l, 0.0));
        let eval =
            QfiEvaluator::from_hamiltonians(&build(lambda), &build(lambda + h), &build(lambda - h), h)
                .unwrap();
        let alpha = c64(1.5, 0.0);
        let psi = coherent_state(alpha, cut).unwrap();
        for &t in &[0.1, 0.3, 1.0] {
            let f = eval.qfi(&psi, t).unwrap();
            let expect = 4.0 * t * t * alpha.norm_sqr();
            assert!(
                (f - expect).abs() <= 1e-6 * expect,
                "t={t}: {f} vs {expect}"
            );
        }
    }

    #[test]
    fn short_time_ratio_ground_and_excited_atoms() {
        let params = jc(1, 30);
        let psi = ground_product(6, &params);
        assert_eq!(qfi_short_time_ratio(&params, &psi, &psi).unwrap(), 1.0);

        let r = qfi_short_time_ratio(
            &params,
            &ground_product(6, &params),
            &ground_product(3, &params),
        )
        .unwrap();
        assert!((r - 2.0).abs() <= 1e-12, "ground ratio = {r}");

        let r = qfi_short_time_ratio(
            &params,
            &excited_product(6, &params),
            &excited_product(3, &params),
        )
        .unwrap();
        assert!((r - 1.75).abs() <= 1e-12, "excited ratio = {r}");
    }

    #[test]
    fn short_time_ratio_rejects_zero_variance_reference() {
        // |1> (x) |g> for p = 2 has zero coupling variance
        let params = jc(2, 16);
        let err = qfi_short_time_ratio(
            &params,
            &ground_product(6, &params),
            &ground_product(1, &params),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateReference { .. }));
    }

    #[test]
    fn indirect_equals_direct_for_identical_states() {
        let params = jc(1, 20);
        let psi = ground_product(4, &params);
        let t0 = 1e-3 / params.g;
        let indirect = qfi_indirect(&params, &psi, &psi, t0).unwrap();
        let direct = qfi_pure(&params, &psi, t0, None).unwrap();
        assert_eq!(indirect.f, direct.f);
    }

    #[test]
    fn indirect_tracks_direct_for_number_states() {
        let params = jc(1, 30);
        let target = ground_product(6, &params);
        let reference = ground_product(3, &params);
        let t0 = 1e-3 / params.g;
        let indirect = qfi_indirect(&params, &target, &reference, t0).unwrap();
        let direct = qfi_pure(&params, &target, t0, None).unwrap();
        let rel = indirect.f / direct.f;
        assert!((0.99..=1.01).contains(&rel), "indirect/direct = {rel}");
    }

    #[test]
    fn indirect_tracks_direct_for_full_coupling_model() {
        let params = ModelParams::defaults(ModelKind::Rabi).with_cutoff(30);
        let target = ground_product(6, &params);
        let reference = ground_product(3, &params);
        let exact = qfi_short_time_ratio(&params, &target, &reference).unwrap();
        assert!((exact - 13.0 / 7.0).abs() <= 1e-12);
        let t0 = 1e-3 / params.g;
        let indirect = qfi_indirect(&params, &target, &reference, t0).unwrap();
        let direct = qfi_pure(&params, &target, t0, None).unwrap();
        let rel = indirect.f / direct.f;
        assert!((0.99..=1.01).contains(&rel), "indirect/direct = {rel}");
    }

    #[test]
    fn qfi_is_nonnegative() {
        let params = jc(1, 25);
        for n in [0usize, 2, 5, 9] {
            let psi = ground_product(n, &params);
            for &t in &[0.01, 0.5, 3.0] {
                let out = qfi_pure(&params, &psi, t, None).unwrap();
                assert!(out.f >= -1e-8, "n={n} t={t}: F = {:.3e}", out.f);
            }
        }
    }

    #[test]
    fn ratio_of_qfi_curves_extrapolates_to_variance_ratio() {
        let params = jc(1, 30);
        let target = ground_product(6, &params);
        let reference = ground_product(3, &params);
        let eval = QfiEvaluator::for_params(&params, ModelParameter::Coupling, None).unwrap();
        let times: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
            .iter()
            .map(|t| t / params.g)
            .collect();
        let ratios: Vec<f64> = times
            .iter()
            .map(|&t| eval.qfi(&target, t).unwrap() / eval.qfi(&reference, t).unwrap())
            .collect();
        // two Richardson sweeps in t^2 on the halved grid
        let r1 = (4.0 * ratios[1] - ratios[0]) / 3.0;
        let r2 = (4.0 * ratios[2] - ratios[1]) / 3.0;
        let extrapolated = (16.0 * r2 - r1) / 15.0;
        let exact = qfi_short_time_ratio(&params, &target, &reference).unwrap();
        assert!(
            (extrapolated - exact).abs() <= 1e-3 * exact.abs(),
            "extrapolated {extrapolated} vs exact {exact}"
        );
    }
}
