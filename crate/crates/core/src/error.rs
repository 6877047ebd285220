use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not hermitian: max|A - A†| = {defect:.3e} exceeds {tolerance:.1e}")]
    NotHermitian { defect: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{points} grid points cannot be split evenly over {cells} cells")]
    NonDivisibleGrid { points: usize, cells: usize },

    #[error("cell area {area:.6e} differs from 2πħ = {expected:.6e}")]
    CellArea { area: f64, expected: f64 },

    #[error("Hilbert-space dimension {dimension} is not the square of an odd integer")]
    NotOddSquare { dimension: usize },

    #[error("hermitian eigensolver did not converge")]
    NoConvergence,

    #[error("state is not normalized: |psi|^2 = {norm_sqr:.12}")]
    NotNormalized { norm_sqr: f64 },

    #[error("trajectory hit the coordinate singularity |p| = 1/2 at t = {t:.6} (q = {q:.6}, p = {p:.6})")]
    FlowSingularity { t: f64, q: f64, p: f64 },

    #[error("point is not stationary: |grad H| = {gradient:.3e}")]
    NotStationary { gradient: f64 },

    #[error("cell index {index} out of range for {count} cells")]
    InvalidCell { index: usize, count: usize },

    #[error("need at least {needed} positive samples in the fit window, found {found}")]
    TooFewSamples { found: usize, needed: usize },

    #[error("fit window has zero time variance")]
    DegenerateTimes,

    #[error("tail selection is empty")]
    EmptyTail,

    #[error("grid spacing resolves |p| <= {resolved:.4} but the momentum cutoff is {cutoff:.4}")]
    Nyquist { resolved: f64, cutoff: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
