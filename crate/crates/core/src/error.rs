//! Error type shared across the library.

use thiserror::Error;

/// Which side of a target/reference pair a condition refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Target,
    Reference,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Target => write!(f, "target"),
            Side::Reference => write!(f, "reference"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    ShapeMismatch { left: usize, right: usize },

    #[error("requested dimension {requested} exceeds the configured maximum {max}")]
    DimTooLarge { requested: usize, max: usize },

    #[error("operator is not Hermitian: max|O - O\u{2020}| = {defect:.3e} exceeds {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("state vector norm {norm} deviates from 1 by more than {tol:.3e}")]
    NotNormalized { norm: f64, tol: f64 },

    #[error("invalid density matrix: {reason}")]
    InvalidDensityMatrix { reason: String },

    #[error("eigendecomposition failed: {reason}")]
    EigenFailure { reason: String },

    #[error("invalid parameters: {reason}")]
    InvalidParams { reason: String },

    #[error("coherent-state truncation deficit {deficit:.3e} exceeds {tol:.3e}; increase the cutoff")]
    TruncationDeficit { deficit: f64, tol: f64 },

    #[error("excitation block n = {n} is absent for p = {p}: the ground component only picks up a phase")]
    BlockAbsent { n: usize, p: usize },

    #[error("no nonzero nested-commutator expectation found up to order {max_n}")]
    UndetectableOrder { max_n: usize },

    #[error("order mismatch at n = {order}: the {vanished} expectation vanishes while the other does not")]
    OrderMismatch { order: usize, vanished: Side },

    #[error("degenerate reference: calibration expectation {value:.3e} is below {tol:.3e}")]
    DegenerateReference { value: f64, tol: f64 },

    #[error("reference change {value:.3e} at t = {t:.3e} is below the roundoff guard {guard:.3e}")]
    UnderflowGuard { value: f64, t: f64, guard: f64 },

    #[error("finite-difference step {h:.3e} failed the halving consistency check: residual {residual:.3e} exceeds {allowed:.3e}")]
    StepInconsistent { h: f64, residual: f64, allowed: f64 },

    #[error("parameter {name} is not supported for derivatives; only the coupling g is")]
    UnsupportedParameter { name: String },

    #[error("t0 = {t0:.3e} lies outside the validated short-time window: extrapolation error {error_estimate:.3e} exceeds {tol:.3e}")]
    OutsideShortTimeWindow { t0: f64, error_estimate: f64, tol: f64 },

    #[error("extrapolated limit drifted by {drift:.3e} (> {tol:.3e}) when the cutoff was grown; results are not converged")]
    ConvergenceDrift { drift: f64, tol: f64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {reason}")]
    Config { reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
