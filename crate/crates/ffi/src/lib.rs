//! C ABI over the indirect-measurement library: opaque handles for models and
//! states, status codes for every failure path, and a thread-local message
//! for the last error.
//!
//! Every function is panic-safe: panics are caught and surfaced as
//! `IimpStatus::Internal`. Pointer contracts are stated per argument; every
//! handle must come from this library and must not be used after free.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::CString;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;

use iimp::error::Error;
use iimp::hilbert::{CVector, Ket, Operator};
use iimp::measure;
use iimp::models::{build_hamiltonian, ModelKind, ModelParams};
use iimp::operators::{atom_ket, coherent_state, composite_ket, fock_state, AtomState, FockCutoff};
use iimp::qfi;

/// Status code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IimpStatus {
    Ok = 0,
    /// A pointer argument was null or a scalar argument out of range.
    InvalidArgument = 1,
    /// Model parameters failed validation.
    InvalidParams = 2,
    /// Dimension mismatch between operands.
    ShapeMismatch = 3,
    /// State construction failed (normalization or truncation deficit).
    InvalidState = 4,
    /// No common derivative order was found.
    UndetectableOrder = 5,
    /// Target and reference expectations vanish at different orders.
    OrderMismatch = 6,
    /// The reference calibration expectation is (numerically) zero.
    DegenerateReference = 7,
    /// The reference signal fell below the roundoff guard.
    UnderflowGuard = 8,
    /// Any other library error; see `iimp_last_error_message`.
    Internal = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized: String = message.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap();
    });
}

fn status_of(err: &Error) -> IimpStatus {
    match err {
        Error::InvalidParams { .. } | Error::Config { .. } => IimpStatus::InvalidParams,
        Error::ShapeMismatch { .. } | Error::DimTooLarge { .. } => IimpStatus::ShapeMismatch,
        Error::NotNormalized { .. }
        | Error::TruncationDeficit { .. }
        | Error::InvalidDensityMatrix { .. } => IimpStatus::InvalidState,
        Error::UndetectableOrder { .. } => IimpStatus::UndetectableOrder,
        Error::OrderMismatch { .. } => IimpStatus::OrderMismatch,
        Error::DegenerateReference { .. } => IimpStatus::DegenerateReference,
        Error::UnderflowGuard { .. } => IimpStatus::UnderflowGuard,
        Error::Stage { source, .. } => status_of(source),
        _ => IimpStatus::Internal,
    }
}

fn fail(err: Error) -> IimpStatus {
    set_error(&err.to_string());
    status_of(&err)
}

fn guarded(f: impl FnOnce() -> IimpStatus + std::panic::UnwindSafe) -> IimpStatus {
    match catch_unwind(f) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            IimpStatus::Internal
        }
    }
}

/// Model kind selector.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IimpModelKind {
    Rabi = 0,
    Jc = 1,
    Dicke = 2,
    Tc = 3,
}

/// Directly measured observable selector.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IimpObservable {
    SigmaZ = 0,
    PhotonNumber = 1,
    Jz = 2,
}

/// Opaque handle: one Hamiltonian with its parameters.
pub struct IimpModel {
    params: ModelParams,
    hamiltonian: Operator,
}

/// Opaque handle: a pure state on the model's full product space.
pub struct IimpState {
    ket: Ket,
}

/// Indirect-measurement outcome returned by value.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct IimpEstimate {
    pub order_n: usize,
    pub ratio_exact: f64,
    pub ratio_numeric: f64,
    pub ratio_numeric_error: f64,
    pub estimate: f64,
    pub reference_value: f64,
}

impl IimpModel {
    fn observable(&self, obs: IimpObservable) -> Result<Operator, Error> {
        let params = &self.params;
        match obs {
            IimpObservable::SigmaZ => iimp::cli::Observable::SigmaZ.build(params),
            IimpObservable::PhotonNumber => iimp::cli::Observable::PhotonNumber.build(params),
            IimpObservable::Jz => iimp::cli::Observable::Jz.build(params),
        }
    }
}

unsafe fn write_out<T>(out: *mut T, value: T) -> IimpStatus {
    if out.is_null() {
        set_error("output pointer is null");
        return IimpStatus::InvalidArgument;
    }
    out.write(value);
    IimpStatus::Ok
}

/// Build a model. `n_atoms` must be 1 for the single-atom kinds. On success
/// `*out` owns the handle; release it with `iimp_model_free`.
#[no_mangle]
pub unsafe extern "C" fn iimp_model_new(
    kind: IimpModelKind,
    omega_a: f64,
    omega_0: f64,
    g: f64,
    kerr_u: f64,
    gamma: f64,
    p: usize,
    n_atoms: usize,
    cutoff: usize,
    out: *mut *mut IimpModel,
) -> IimpStatus {
    guarded(AssertUnwindSafe(|| {
        if out.is_null() {
            set_error("output pointer is null");
            return IimpStatus::InvalidArgument;
        }
        let params = ModelParams {
            kind: match kind {
                IimpModelKind::Rabi => ModelKind::Rabi,
                IimpModelKind::Jc => ModelKind::Jc,
                IimpModelKind::Dicke => ModelKind::Dicke,
                IimpModelKind::Tc => ModelKind::Tc,
            },
            omega_a,
            omega_0,
            g,
            kerr: kerr_u,
            dispersive: gamma,
            p,
            n_atoms,
            cutoff: FockCutoff(cutoff),
        };
        let hamiltonian = match build_hamiltonian(&params) {
            Ok(h) => h,
            Err(e) => return fail(e),
        };
        out.write(Box::into_raw(Box::new(IimpModel { params, hamiltonian })));
        IimpStatus::Ok
    }))
}

#[no_mangle]
pub unsafe extern "C" fn iimp_model_free(model: *mut IimpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Total Hilbert-space dimension of the model.
#[no_mangle]
pub unsafe extern "C" fn iimp_model_dimension(model: *const IimpModel) -> usize {
    if model.is_null() {
        return 0;
    }
    (*model).params.total_dim()
}

fn new_state(out: *mut *mut IimpState, ket: Ket) -> IimpStatus {
    unsafe { write_out(out, Box::into_raw(Box::new(IimpState { ket }))) }
}

/// Number state |n> of the field, atoms all in the ground state.
#[no_mangle]
pub unsafe extern "C" fn iimp_state_fock(
    model: *const IimpModel,
    n: usize,
    out: *mut *mut IimpState,
) -> IimpStatus {
    guarded(AssertUnwindSafe(|| {
        if model.is_null() || out.is_null() {
            set_error("null pointer argument");
            return IimpStatus::InvalidArgument;
        }
        let params = &(*model).params;
        let assembled = fock_state(n, params.cutoff)
            .and_then(|f| composite_ket(&f, &params.ground_atom()?));
        match assembled {
            Ok(ket) => new_state(out, ket),
            Err(e) => fail(e),
        }
    }))
}

/// Coherent state alpha = re + i im of the field, atoms all ground.
#[no_mangle]
pub unsafe extern "C" fn iimp_state_coherent(
    model: *const IimpModel,
    re: f64,
    im: f64,
    out: *mut *mut IimpState,
) -> IimpStatus {
    guarded(AssertUnwindSafe(|| {
        if model.is_null() || out.is_null() {
            set_error("null pointer argument");
            return IimpStatus::InvalidArgument;
        }
        let params = &(*model).params;
        let assembled = coherent_state(Complex64::new(re, im), params.cutoff)
            .and_then(|f| composite_ket(&f, &params.ground_atom()?));
        match assembled {
            Ok(ket) => new_state(out, ket),
            Err(e) => fail(e),
        }
    }))
}

/// Vacuum field with a two-level atom c_g |g> + c_e |e> (single-atom kinds).
#[no_mangle]
pub unsafe extern "C" fn iimp_state_atom(
    model: *const IimpModel,
    c_g_re: f64,
    c_g_im: f64,
    c_e_re: f64,
    c_e_im: f64,
    out: *mut *mut IimpState,
) -> IimpStatus {
    guarded(AssertUnwindSafe(|| {
        if model.is_null() || out.is_null() {
            set_error("null pointer argument");
            return IimpStatus::InvalidArgument;
        }
        let params = &(*model).params;
        if params.kind.is_collective() {
            set_error("two-level atom amplitudes need a single-atom model");
            return IimpStatus::InvalidParams;
        }
        let assembled = AtomState::new(
            Complex64::new(c_g_re, c_g_im),
            Complex64::new(c_e_re, c_e_im),
        )
        .and_then(|atom| {
            let field = fock_state(0, params.cutoff)?;
            composite_ket(&field, &atom_ket(atom))
        });
        match assembled {
            Ok(ket) => new_state(out, ket),
            Err(e) => fail(e),
        }
    }))
}

/// State from raw amplitudes over the full product space (length must equal
/// `iimp_model_dimension`); the vector is normalized on entry.
#[no_mangle]
pub unsafe extern "C" fn iimp_state_from_amplitudes(
    model: *const IimpModel,
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut IimpState,
) -> IimpStatus {
    guarded(AssertUnwindSafe(|| {
        if model.is_null() || re.is_null() || im.is_null() || out.is_null() {
            set_error("null pointer argument");
            return IimpStatus::InvalidArgument;
        }
        let params = &(*model).params;
        if len != params.total_dim() {
            set_error("amplitude length does not match the model dimension");
            return IimpStatus::ShapeMismatch;
        }
        let re = std::slice::from_raw_parts(re, len);
        let im = std::slice::from_raw_parts(im, len);
        let v = CVector::from_iterator(len, (0..len).map(|k| Complex64::new(re[k], im[k])));
        match Ket::normalized(v) {
            Ok(ket) => new_state(out, ket),
            Err(e) => fail(e),
        }
    }))
}

#[no_mangle]
pub unsafe extern "C" fn iimp_state_free(state: *mut IimpState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

unsafe fn triple<'a>(
    model: *const IimpModel,
    target: *const IimpState,
    reference: *const IimpState,
) -> Option<(&'a IimpModel, &'a IimpState, &'a IimpState)> {
    if model.is_null() || target.is_null() || reference.is_null() {
        set_error("null pointer argument");
        return None;
    }
    Some((&*model, &*target, &*reference))
}

/// Exact t -> 0 ratio of the expectation changes from the nested-commutator
/// expectations.
#[no_mangle]
pub unsafe extern "C" fn iimp_ratio_limit_exact(
    model: *const IimpModel,
    observable: IimpObservable,
    target: *const IimpState,
    reference: *const IimpState,
    out: *mut f64,
) -> IimpStatus {
    guarded(AssertUnwindSafe(|| {
        let Some((model, target, reference)) = triple(model, target, reference) else {
            return IimpStatus::InvalidArgument;
        };
        let a = match model.observable(observable) {
            Ok(a) => a,
            Err(e) => return fail(e),
        };
        match measure::ratio_limit_exact(&model.hamiltonian, &a, &target.ket, &reference.ket) {
            Ok(r) => write_out(out, r),
            Err(e) => fail(e),
        }
    }))
}

/// Extrapolated t -> 0 ratio. Pass `t0 <= 0` and/or `levels == 0` for the
/// defaults. `error_estimate` may be null.
#[no_mangle]
pub unsafe extern "C" fn iimp_ratio_limit_numeric(
    model: *const IimpModel,
    observable: IimpObservable,
    target: *const IimpState,
    reference: *const IimpState,
    t0: f64,
    levels: usize,
    out_ratio: *mut f64,
    out_error_estimate: *mut f64,
) -> IimpStatus {
    guarded(AssertUnwindSafe(|| {
        let Some((model, target, reference)) = triple(model, target, reference) else {
            return IimpStatus::InvalidArgument;
        };
        let a = match model.observable(observable) {
            Ok(a) => a,
            Err(e) => return fail(e),
        };
        let t0 = if t0 > 0.0 { Some(t0) } else { None };
        let levels = if levels == 0 {
            iimp::policy::DEFAULT_EXTRAPOLATION_LEVELS
        } else {
            levels
        };
        match measure::ratio_limit_numeric(
            &model.hamiltonian,
            &a,
            &target.ket,
            &reference.ket,
            t0,
            levels,
        ) {
            Ok(r) => {
                if !out_error_estimate.is_null() {
                    out_error_estimate.write(r.error_estimate);
                }
                write_out(out_ratio, r.ratio)
            }
            Err(e) => fail(e),
        }
    }))
}

/// Calibrated indirect estimate. `reference_value` may be null, in which case
/// the reference nested-commutator expectation is computed internally.
#[no_mangle]
pub unsafe extern "C" fn iimp_indirect_estimate(
    model: *const IimpModel,
    observable: IimpObservable,
    target: *const IimpState,
    reference: *const IimpState,
    reference_value: *const f64,
    out: *mut IimpEstimate,
) -> IimpStatus {
    guarded(AssertUnwindSafe(|| {
        let Some((model, target, reference)) = triple(model, target, reference) else {
            return IimpStatus::InvalidArgument;
        };
        let a = match model.observable(observable) {
            Ok(a) => a,
            Err(e) => return fail(e),
        };
        let calibration = if reference_value.is_null() {
            None
        } else {
            Some(*reference_value)
        };
        match measure::indirect_estimate(
            &model.hamiltonian,
            &a,
            &target.ket,
            &reference.ket,
            calibration,
        ) {
            Ok(r) => write_out(
                out,
                IimpEstimate {
                    order_n: r.order_n,
                    ratio_exact: r.ratio_exact,
                    ratio_numeric: r.ratio_numeric,
                    ratio_numeric_error: r.ratio_numeric_error,
                    estimate: r.estimate,
                    reference_value: r.reference_value,
                },
            ),
            Err(e) => fail(e),
        }
    }))
}

/// Quantum Fisher information of the coupling g at time t (units of
/// 1/omega_a). Pass `h <= 0` for the default finite-difference step.
#[no_mangle]
pub unsafe extern "C" fn iimp_qfi_pure(
    model: *const IimpModel,
    state: *const IimpState,
    t: f64,
    h: f64,
    out: *mut f64,
) -> IimpStatus {
    guarded(AssertUnwindSafe(|| {
        if model.is_null() || state.is_null() {
            set_error("null pointer argument");
            return IimpStatus::InvalidArgument;
        }
        let step = if h > 0.0 { Some(h) } else { None };
        match qfi::qfi_pure(&(*model).params, &(*state).ket, t, step) {
            Ok(r) => write_out(out, r.f),
            Err(e) => fail(e),
        }
    }))
}

/// Exact t -> 0 QFI ratio: the coupling-derivative variance ratio.
#[no_mangle]
pub unsafe extern "C" fn iimp_qfi_short_time_ratio(
    model: *const IimpModel,
    target: *const IimpState,
    reference: *const IimpState,
    out: *mut f64,
) -> IimpStatus {
    guarded(AssertUnwindSafe(|| {
        let Some((model, target, reference)) = triple(model, target, reference) else {
            return IimpStatus::InvalidArgument;
        };
        match qfi::qfi_short_time_ratio(&model.params, &target.ket, &reference.ket) {
            Ok(r) => write_out(out, r),
            Err(e) => fail(e),
        }
    }))
}

/// Copy the last error message of this thread into `buf` (truncated to
/// `len - 1` bytes, always NUL-terminated). Returns the full message length.
#[no_mangle]
pub unsafe extern "C" fn iimp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn iimp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
