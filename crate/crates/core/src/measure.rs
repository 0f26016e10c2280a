//! The indirect measurement machinery: order detection, exact and
//! numerically extrapolated t -> 0 ratios, and calibrated indirect estimates
//! for pure and mixed states.
//!
//! The measured signal is the short-time change of one observable under two
//! initial states of the same Hamiltonian. Its t -> 0 ratio equals the ratio
//! of nested-commutator expectations at the first order n where both are
//! nonzero; multiplying the measured ratio by the known reference expectation
//! calibrates an estimate for the unknown state.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result, Side};
use crate::evolution::{DeltaEvaluator, DeltaEvaluatorMixed};
use crate::hilbert::{
    expectation_mixed, expectation_real, DensityMatrix, Ket, Operator, Propagator,
};
use crate::models::{ModelKind, ModelParams};
use crate::operators::{annihilation, composite_ket, composite_op, number_operator, pauli_ops,
    AtomState, atom_ket};
use crate::policy::{DEFAULT_EXTRAPOLATION_LEVELS, DEFAULT_LADDER_SCALE, POLICY};

/// Outcome of the order search: the first n at which both expectation values
/// clear the scale-relative threshold.
#[derive(Debug)]
pub struct OrderDetection {
    pub order: usize,
    pub target_value: f64,
    pub reference_value: f64,
    pub commutator: Operator,
}

pub const DEFAULT_MAX_ORDER: usize = 4;

fn detect_order_with(
    h: &Operator,
    a: &Operator,
    max_n: usize,
    mut expect: impl FnMut(&Operator, Side) -> Result<f64>,
) -> Result<OrderDetection> {
    if max_n < 1 {
        return Err(Error::InvalidParams {
            reason: "max_n must be at least 1".into(),
        });
    }
    let sqrt_dim = (h.dim() as f64).sqrt();
    let mut nested = a.clone();
    for n in 1..=max_n {
        nested = crate::hilbert::nested_commutator(h, &nested, 1)?;
        let scale = POLICY.order_detection * nested.frobenius_norm() / sqrt_dim;
        let target_value = expect(&nested, Side::Target)?;
        let reference_value = expect(&nested, Side::Reference)?;
        match (target_value.abs() > scale, reference_value.abs() > scale) {
            (true, true) => {
                return Ok(OrderDetection {
                    order: n,
                    target_value,
                    reference_value,
                    commutator: nested,
                })
            }
            (true, false) => {
                return Err(Error::OrderMismatch {
                    order: n,
                    vanished: Side::Reference,
                })
            }
            (false, true) => {
                return Err(Error::OrderMismatch {
                    order: n,
                    vanished: Side::Target,
                })
            }
            (false, false) => {}
        }
    }
    Err(Error::UndetectableOrder { max_n })
}

/// Smallest n <= max_n at which both <(iH)^n(A)> expectations are nonzero.
pub fn detect_order(
    h: &Operator,
    a: &Operator,
    psi0: &Ket,
    psir0: &Ket,
    max_n: usize,
) -> Result<OrderDetection> {
    detect_order_with(h, a, max_n, |c, side| {
        expectation_real(
            match side {
                Side::Target => psi0,
                Side::Reference => psir0,
            },
            c,
        )
    })
}

/// Mixed-state order detection via Tr[(iH)^n(A) rho].
pub fn detect_order_mixed(
    h: &Operator,
    a: &Operator,
    rho0: &DensityMatrix,
    rhor0: &DensityMatrix,
    max_n: usize,
) -> Result<OrderDetection> {
    detect_order_with(h, a, max_n, |c, side| {
        Ok(expectation_mixed(
            match side {
                Side::Target => rho0,
                Side::Reference => rhor0,
            },
            c,
        )?
        .re)
    })
}

/// Exact t -> 0 ratio from the nested-commutator expectations.
pub fn ratio_limit_exact(h: &Operator, a: &Operator, psi0: &Ket, psir0: &Ket) -> Result<f64> {
    let det = detect_order(h, a, psi0, psir0, DEFAULT_MAX_ORDER)?;
    Ok(det.target_value / det.reference_value)
}

pub fn ratio_limit_exact_mixed(
    h: &Operator,
    a: &Operator,
    rho0: &DensityMatrix,
    rhor0: &DensityMatrix,
) -> Result<f64> {
    let det = detect_order_mixed(h, a, rho0, rhor0, DEFAULT_MAX_ORDER)?;
    Ok(det.target_value / det.reference_value)
}

/// One rung of the extrapolation ladder. The ratio is symmetrized over
/// +t and -t (backward evolution), which removes every odd power of t from
/// its short-time series without moving the limit, so the t^2 Richardson
/// model below is exact for any common order.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RatioSample {
    pub t: f64,
    pub ratio: f64,
}

/// Extrapolated t -> 0 ratio with its error estimate (the last extrapolation
/// increment) and the raw ladder samples.
#[derive(Clone, Debug, Serialize)]
pub struct ExtrapolatedRatio {
    pub ratio: f64,
    pub error_estimate: f64,
    pub samples: Vec<RatioSample>,
}

/// Richardson extrapolation in t^2 on a geometric ladder t_k = t0 / 2^k.
fn richardson_t2(samples: &[f64]) -> (f64, f64) {
    let l = samples.len();
    let mut tableau: Vec<Vec<f64>> = vec![samples.to_vec()];
    for j in 1..l {
        let weight = 4f64.powi(j as i32);
        let prev = &tableau[j - 1];
        let mut row = Vec::with_capacity(l - j);
        for k in 0..(l - j) {
            row.push((weight * prev[k + 1] - prev[k]) / (weight - 1.0));
        }
        tableau.push(row);
    }
    let best = tableau[l - 1][0];
    let parent = tableau[l - 2][1];
    (best, (best - parent).abs())
}

fn ladder_times(t0: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|k| t0 / 2f64.powi(k as i32)).collect()
}

fn extrapolate_ladder(
    target: impl Fn(f64) -> f64,
    reference: impl Fn(f64) -> f64,
    reference_scale: f64,
    t0: f64,
    levels: usize,
) -> Result<ExtrapolatedRatio> {
    let guard = POLICY.underflow_guard * f64::EPSILON * reference_scale.abs().max(1.0);
    let mut samples = Vec::with_capacity(levels);
    for t in ladder_times(t0, levels) {
        let one_sided = |t: f64| -> Result<f64> {
            let dr = reference(t);
            if dr.abs() < guard {
                return Err(Error::UnderflowGuard {
                    value: dr,
                    t,
                    guard,
                });
            }
            Ok(target(t) / dr)
        };
        let ratio = 0.5 * (one_sided(t)? + one_sided(-t)?);
        samples.push(RatioSample { t, ratio });
    }
    let ratios: Vec<f64> = samples.iter().map(|s| s.ratio).collect();
    let (ratio, error_estimate) = richardson_t2(&ratios);
    Ok(ExtrapolatedRatio {
        ratio,
        error_estimate,
        samples,
    })
}

fn resolve_t0(t0: Option<f64>, spectral_radius: f64, levels: usize) -> Result<f64> {
    if levels < 3 {
        return Err(Error::InvalidParams {
            reason: "extrapolation needs at least 3 levels".into(),
        });
    }
    let scale = spectral_radius.max(f64::MIN_POSITIVE);
    let t0 = t0.unwrap_or(DEFAULT_LADDER_SCALE / scale);
    if t0 <= 0.0 || t0 * scale > 0.5 {
        return Err(Error::InvalidParams {
            reason: format!(
                "ladder start t0 = {t0:.3e} must satisfy 0 < t0 * ||H|| <= 0.5 (||H|| ~ {scale:.3e})"
            ),
        });
    }
    Ok(t0)
}

/// Numerically extrapolated t -> 0 ratio of the expectation changes.
pub fn ratio_limit_numeric(
    h: &Operator,
    a: &Operator,
    psi0: &Ket,
    psir0: &Ket,
    t0: Option<f64>,
    levels: usize,
) -> Result<ExtrapolatedRatio> {
    let prop = Propagator::new(h)?;
    ratio_limit_numeric_with(&prop, a, psi0, psir0, t0, levels)
}

/// [`ratio_limit_numeric`] on an already-factorized Hamiltonian.
pub fn ratio_limit_numeric_with(
    prop: &Propagator,
    a: &Operator,
    psi0: &Ket,
    psir0: &Ket,
    t0: Option<f64>,
    levels: usize,
) -> Result<ExtrapolatedRatio> {
    let t0 = resolve_t0(t0, prop.spectral_radius(), levels)?;
    let target = DeltaEvaluator::new(prop, a, psi0)?;
    let reference = DeltaEvaluator::new(prop, a, psir0)?;
    let scale = reference.initial_mean();
    extrapolate_ladder(|t| target.delta(t), |t| reference.delta(t), scale, t0, levels)
}

/// Mixed-state version of [`ratio_limit_numeric`].
pub fn ratio_limit_numeric_mixed(
    h: &Operator,
    a: &Operator,
    rho0: &DensityMatrix,
    rhor0: &DensityMatrix,
    t0: Option<f64>,
    levels: usize,
) -> Result<ExtrapolatedRatio> {
    let prop = Propagator::new(h)?;
    let t0 = resolve_t0(t0, prop.spectral_radius(), levels)?;
    let target = DeltaEvaluatorMixed::new(&prop, a, rho0)?;
    let reference = DeltaEvaluatorMixed::new(&prop, a, rhor0)?;
    let scale = reference.initial_mean();
    extrapolate_ladder(|t| target.delta(t), |t| reference.delta(t), scale, t0, levels)
}

/// Calibrated indirect estimate: detected order, exact and extrapolated
/// ratios, and estimate = reference_value * extrapolated ratio.
#[derive(Clone, Debug, Serialize)]
pub struct IimpResult {
    pub order_n: usize,
    pub ratio_exact: f64,
    pub ratio_numeric: f64,
    pub ratio_numeric_error: f64,
    pub estimate: f64,
    pub reference_value: f64,
}

fn calibrate(
    detection: OrderDetection,
    numeric: ExtrapolatedRatio,
    reference_value: Option<f64>,
) -> Result<IimpResult> {
    let reference_value = match reference_value {
        Some(v) => {
            if v.abs() < POLICY.degenerate_reference {
                return Err(Error::DegenerateReference {
                    value: v,
                    tol: POLICY.degenerate_reference,
                });
            }
            v
        }
        None => detection.reference_value,
    };
    Ok(IimpResult {
        order_n: detection.order,
        ratio_exact: detection.target_value / detection.reference_value,
        ratio_numeric: numeric.ratio,
        ratio_numeric_error: numeric.error_estimate,
        estimate: reference_value * numeric.ratio,
        reference_value,
    })
}

/// Indirect estimate of the target-state expectation.
///
/// `reference_value` is the known calibration expectation of the reference
/// state. Pass `None` to compute the nested-commutator expectation of the
/// reference internally; pass a known physical moment to calibrate the
/// estimate in those units instead.
pub fn indirect_estimate(
    h: &Operator,
    a: &Operator,
    psi0: &Ket,
    psir0: &Ket,
    reference_value: Option<f64>,
) -> Result<IimpResult> {
    let detection = detect_order(h, a, psi0, psir0, DEFAULT_MAX_ORDER)?;
    let numeric = ratio_limit_numeric(h, a, psi0, psir0, None, DEFAULT_EXTRAPOLATION_LEVELS)?;
    calibrate(detection, numeric, reference_value)
}

/// Mixed-state indirect estimate via trace-form expectations.
pub fn indirect_estimate_mixed(
    h: &Operator,
    a: &Operator,
    rho0: &DensityMatrix,
    rhor0: &DensityMatrix,
    reference_value: Option<f64>,
) -> Result<IimpResult> {
    let detection = detect_order_mixed(h, a, rho0, rhor0, DEFAULT_MAX_ORDER)?;
    let numeric =
        ratio_limit_numeric_mixed(h, a, rho0, rhor0, None, DEFAULT_EXTRAPOLATION_LEVELS)?;
    calibrate(detection, numeric, reference_value)
}

/// Comparison of a finite-difference time derivative of `Delta<A>` against the
/// nested-commutator expectation it should equal in the t -> 0 limit.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DerivativeCheck {
    pub fd_value: f64,
    pub commutator_value: f64,
    pub abs_diff: f64,
}

/// Order-4 central finite-difference derivative of `Delta<A>(t)` at t = 0 for
/// n in {1, 2, 3}, with negative times evaluated by backward evolution.
pub fn derivative_commutator_check(
    h: &Operator,
    a: &Operator,
    psi0: &Ket,
    n: usize,
    dt: f64,
) -> Result<DerivativeCheck> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidParams {
            reason: "finite-difference stencils are provided for n in 1..=3".into(),
        });
    }
    if dt <= 0.0 {
        return Err(Error::InvalidParams {
            reason: "dt must be positive".into(),
        });
    }
    let prop = Propagator::new(h)?;
    let eval = DeltaEvaluator::new(&prop, a, psi0)?;
    let f = |t: f64| eval.delta(t);

    let noise_floor = 1e3 * f64::EPSILON * eval.initial_mean().abs().max(1.0);
    let probe = f(dt).abs().max(f(-dt).abs());
    if probe < noise_floor {
        log::warn!(
            "finite-difference signal {probe:.3e} at dt = {dt:.3e} is near the roundoff floor {noise_floor:.3e}"
        );
    }

    let fd_value = match n {
        1 => (f(-2.0 * dt) - 8.0 * f(-dt) + 8.0 * f(dt) - f(2.0 * dt)) / (12.0 * dt),
        2 => {
            (-f(-2.0 * dt) + 16.0 * f(-dt) + 16.0 * f(dt) - f(2.0 * dt)) / (12.0 * dt * dt)
            // the f(0) term is exactly zero by construction
        }
        _ => {
            (f(-3.0 * dt) / 8.0 - f(-2.0 * dt) + 13.0 / 8.0 * f(-dt) - 13.0 / 8.0 * f(dt)
                + f(2.0 * dt)
                - f(3.0 * dt) / 8.0)
                / (dt * dt * dt)
        }
    };
    let nested = crate::hilbert::nested_commutator(h, a, n)?;
    let commutator_value = expectation_real(psi0, &nested)?;
    Ok(DerivativeCheck {
        fd_value,
        commutator_value,
        abs_diff: (fd_value - commutator_value).abs(),
    })
}

/// Probe atom state (|g> - i e^{i theta} |e>)/sqrt(2) used for quadrature
/// readout.
pub fn quadrature_probe_atom(theta: f64) -> Ket {
    let inv = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
    let c_e = -crate::hilbert::I * Complex64::from_polar(1.0, theta) * inv;
    atom_ket(AtomState { c_g: inv, c_e })
}

/// Indirect estimate of the field quadrature <X(theta)> with
/// X(theta) = (a e^{-i theta} + a† e^{i theta}) / sqrt(2), read out through
/// the photon-number change of a single-photon rotating-wave model whose
/// probe atom is prepared in (|g> - i e^{i theta}|e>)/sqrt(2).
///
/// The first-order signal estimates <i(a† sigma- - sigma+ a)>, which equals
/// <X(theta)>/sqrt(2) for this probe; the returned value carries the sqrt(2)
/// rescaling, so it is <X(theta)> itself.
pub fn quadrature_estimate(
    theta: f64,
    params: &ModelParams,
    psi_field: &Ket,
    psir_field: &Ket,
) -> Result<f64> {
    params.validate()?;
    if params.kind != ModelKind::Jc || params.p != 1 {
        return Err(Error::InvalidParams {
            reason: "quadrature readout requires the single-photon rotating-wave model".into(),
        });
    }
    let h = crate::models::build_hamiltonian(params)?;
    let probe = quadrature_probe_atom(theta);
    let psi0 = composite_ket(psi_field, &probe)?;
    let psir0 = composite_ket(psir_field, &probe)?;

    let id_atom = Operator::identity(2);
    let a_obs = composite_op(&number_operator(params.cutoff)?, &id_atom)?;

    // i (a† sigma- - sigma+ a) on the product space
    let pauli = pauli_ops();
    let field_a = annihilation(params.cutoff)?;
    let q = (&composite_op(&field_a.adjoint(), &pauli.minus)?
        - &composite_op(&field_a, &pauli.plus)?)
        .scale(crate::hilbert::I);
    let reference_value = expectation_real(&psir0, &q)?;
    if reference_value.abs() < POLICY.degenerate_reference {
        return Err(Error::DegenerateReference {
            value: reference_value,
            tol: POLICY.degenerate_reference,
        });
    }
    // errors with the order-mismatch condition when the target quadrature
    // mean vanishes (e.g. number-state fields)
    detect_order(&h, &a_obs, &psi0, &psir0, DEFAULT_MAX_ORDER)?;
    let numeric =
        ratio_limit_numeric(&h, &a_obs, &psi0, &psir0, None, DEFAULT_EXTRAPOLATION_LEVELS)?;
    Ok(2f64.sqrt() * numeric.ratio * reference_value)
}
