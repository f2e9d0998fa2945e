use thiserror::Error;

/// Errors raised by the transfer/scattering pipeline.
///
/// Numeric payloads are reported in double precision regardless of the
/// scalar type the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (relative deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("parabolic channel {channel} at energy {energy}: ||lambda - E| - 2| = {distance:e}")]
    ParabolicChannel {
        energy: f64,
        channel: usize,
        distance: f64,
    },

    #[error("hyperbolic block A_E is singular at energy {energy} (sigma_min = {sigma_min:e}, threshold {threshold:e})")]
    SingularAE {
        energy: f64,
        sigma_min: f64,
        threshold: f64,
    },

    #[error("matrix is not pseudo-unitary (residual {residual:e})")]
    NotPseudoUnitary { residual: f64 },

    #[error("transmission block is not invertible (sigma_min = {sigma_min:e})")]
    NonInvertibleTransmission { sigma_min: f64 },

    #[error("Lippmann-Schwinger system is singular at energy {energy} (relative sigma_min = {sigma_min:e})")]
    SingularSystem { energy: f64, sigma_min: f64 },

    #[error("no elliptic channel at energy {energy}")]
    NoElasticChannel { energy: f64 },

    #[error("{structure} residual {residual:e} exceeds tolerance {tolerance:e}")]
    StructureViolation {
        structure: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("non-finite entry produced by {0}")]
    NonFinite(&'static str),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotHermitian { .. } => "NotHermitian",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::ParabolicChannel { .. } => "ParabolicChannel",
            Error::SingularAE { .. } => "SingularAE",
            Error::NotPseudoUnitary { .. } => "NotPseudoUnitary",
            Error::NonInvertibleTransmission { .. } => "NonInvertibleTransmission",
            Error::SingularSystem { .. } => "SingularSystem",
            Error::NoElasticChannel { .. } => "NoElasticChannel",
            Error::StructureViolation { .. } => "StructureViolation",
            Error::InvalidModel(_) => "InvalidModel",
            Error::NonFinite(_) => "NonFinite",
        }
    }

    /// Errors that describe the physics at the requested energy rather than
    /// malformed input.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::ParabolicChannel { .. }
                | Error::SingularAE { .. }
                | Error::NonInvertibleTransmission { .. }
                | Error::SingularSystem { .. }
                | Error::NoElasticChannel { .. }
                | Error::NotPseudoUnitary { .. }
                | Error::StructureViolation { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
