use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("transfer function has a pole on the unit circle at omega = {omega}")]
    PoleOnUnitCircle { omega: f64 },

    #[error("series division failed: leading denominator coefficient vanishes")]
    SeriesDivision,

    #[error("root at |z| = {modulus} is within 1e-9 of the unit circle (marginally stable)")]
    MarginalStability { modulus: f64 },

    #[error("denominator roots are not reciprocal-symmetric: {inside} inside the unit circle, expected {expected}")]
    Asymmetry { inside: usize, expected: usize },

    #[error("linear system is singular or ill-conditioned (condition estimate {cond:e})")]
    Singular { cond: f64 },

    #[error("double-precision parts miss the designed transfer function by {error:e} (relative); the design is too ill-conditioned to realize")]
    Reconstruction { error: f64 },

    #[error("recursive filter is unstable: forward pole at |z| = {modulus}")]
    Unstable { modulus: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gaussian truncated at K = {k}: discarded tail mass {tail_mass:e} exceeds 1e-3")]
    Truncation { k: usize, tail_mass: f64 },

    #[error("kernel of length {kernel} does not fit a scan line of length {line}")]
    KernelTooLong { kernel: usize, line: usize },

    #[error("image format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::PoleOnUnitCircle { .. }
                | Error::SeriesDivision
                | Error::MarginalStability { .. }
                | Error::Asymmetry { .. }
                | Error::Singular { .. }
                | Error::Reconstruction { .. }
                | Error::Unstable { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
