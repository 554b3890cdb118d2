use alloc::string::String;

/// Errors raised by loading, preprocessing and estimation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry at (i={i}, j={j}, t={t})")]
    NonFiniteEntry { i: usize, j: usize, t: usize },
    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("component ({i}, {j}) has zero variance")]
    ZeroVariance { i: usize, j: usize },
    #[error("missing entry at (i={i}, j={j}, t={t}) has fewer than three predecessors")]
    InsufficientHistory { i: usize, j: usize, t: usize },
    #[error("covariance of the data matrix is degenerate (total variance is zero)")]
    DegenerateCovariance,
    #[error("lag {lag} is outside [1, {max}]")]
    LagTooLarge { lag: usize, max: usize },
    #[error("projection matrix is not orthonormal (deviation {deviation:e})")]
    NonOrthonormalProjection { deviation: f64 },
    #[error("every eigenvalue is numerically zero; rank cannot be selected")]
    AllZeroSpectrum,
    #[error("eigenvalues {first} and {second} collide (gap {gap:e})")]
    EigenvalueCollision { first: usize, second: usize, gap: f64 },
    #[error("loading matrix has numerical rank {rank} < {expected}")]
    RankDeficientLoadings { rank: usize, expected: usize },
    #[error("Gram matrix is singular (condition number {condition:e})")]
    SingularGram { condition: f64 },
    #[error("complex eigenvalue {index} has no conjugate partner")]
    UnmatchedComplexEigenvalue { index: usize },
    #[error("factor column {column} has residual imaginary part {magnitude:e}")]
    ResidualImaginaryPart { column: usize, magnitude: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("rolling window does not fit: {0}")]
    WindowTooLong(String),
    #[error("could not draw full-rank loadings after {attempts} attempts")]
    ConstructionFailure { attempts: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn name(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NonFiniteEntry { .. } => "NonFiniteEntry",
            Error::TooShort { .. } => "TooShort",
            Error::ZeroVariance { .. } => "ZeroVariance",
            Error::InsufficientHistory { .. } => "InsufficientHistory",
            Error::DegenerateCovariance => "DegenerateCovariance",
            Error::LagTooLarge { .. } => "LagTooLarge",
            Error::NonOrthonormalProjection { .. } => "NonOrthonormalProjection",
            Error::AllZeroSpectrum => "AllZeroSpectrum",
            Error::EigenvalueCollision { .. } => "EigenvalueCollision",
            Error::RankDeficientLoadings { .. } => "RankDeficientLoadings",
            Error::SingularGram { .. } => "SingularGram",
            Error::UnmatchedComplexEigenvalue { .. } => "UnmatchedComplexEigenvalue",
            Error::ResidualImaginaryPart { .. } => "ResidualImaginaryPart",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::WindowTooLong(_) => "WindowTooLong",
            Error::ConstructionFailure { .. } => "ConstructionFailure",
            Error::InvalidConfig(_) => "InvalidConfig",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
