//! Central numeric policy: every tolerance used by the library and its test
//! suites lives here, so a change in one place propagates everywhere.

/// Tolerances and limits shared by the library, the validation suite, and the
/// test oracles. All comparisons on complex matrices use the max-abs entrywise
/// norm, which is scale-free and cheap.
#[derive(Clone, Copy, Debug)]
pub struct NumericPolicy {
    /// Relative Hermiticity defect allowed on operators tagged Hermitian:
    /// max|O - O†| <= tol * max(1, max|O|).
    pub hermiticity: f64,
    /// Allowed deviation of a state vector norm from 1.
    pub state_norm: f64,
    /// Allowed deviation of a density-matrix trace from 1.
    pub trace: f64,
    /// Most negative eigenvalue a density matrix may carry.
    pub eigenvalue_floor: f64,
    /// Max-abs deviation of U†U from the identity.
    pub unitarity: f64,
    /// Imaginary part allowed on the expectation of a Hermitian operator.
    pub imaginary_leak: f64,
    /// Coherent-state truncation deficit above which a warning is logged.
    pub coherent_deficit_warn: f64,
    /// Coherent-state truncation deficit above which construction fails.
    pub coherent_deficit_error: f64,
    /// Relative threshold deciding whether a nested-commutator expectation is
    /// nonzero, scaled by ||C||_F / sqrt(dim).
    pub order_detection: f64,
    /// Absolute floor below which a caller-supplied calibration value is
    /// considered degenerate.
    pub degenerate_reference: f64,
    /// Largest Hilbert-space dimension a tensor product may produce.
    pub max_dim: usize,
    /// Multiple of machine epsilon below which a reference trajectory change
    /// is considered pure roundoff.
    pub underflow_guard: f64,
    /// Allowed drift of an extrapolated limit when the Fock cutoff is grown
    /// by 1.5x.
    pub convergence_drift: f64,
    /// Extrapolation error above which a time is rejected as outside the
    /// validated short-time window.
    pub short_time_window: f64,
}

pub const POLICY: NumericPolicy = NumericPolicy {
    hermiticity: 1e-12,
    state_norm: 1e-10,
    trace: 1e-10,
    eigenvalue_floor: -1e-10,
    unitarity: 1e-10,
    imaginary_leak: 1e-12,
    coherent_deficit_warn: 1e-8,
    coherent_deficit_error: 1e-4,
    order_detection: 1e-9,
    degenerate_reference: 1e-12,
    max_dim: 4096,
    underflow_guard: 100.0,
    convergence_drift: 1e-6,
    short_time_window: 1e-4,
};

/// Default number of geometric refinement levels in the ratio extrapolation.
pub const DEFAULT_EXTRAPOLATION_LEVELS: usize = 6;

/// Default initial time of the extrapolation ladder, as a fraction of the
/// inverse spectral radius of the Hamiltonian.
pub const DEFAULT_LADDER_SCALE: f64 = 1e-2;

/// Default finite-difference step for coupling derivatives, relative to
/// max(1, |g|).
pub const DEFAULT_COUPLING_STEP: f64 = 1e-5;
