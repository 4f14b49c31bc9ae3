use thiserror::Error;

/// Errors produced anywhere in the identification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("forward solve became unstable at step {step} (t = {time})")]
    UnstableStep { step: usize, time: f64 },

    #[error("implicit system matrix is singular")]
    SingularSystem,

    #[error("time {time} is not a stored level (nearest stored level {nearest})")]
    NotStored { time: f64, nearest: f64 },

    #[error("local polynomial fit is rank deficient at {} point(s), first (m, q) = {:?}", .points.len(), .points.first())]
    RankDeficientFit { points: Vec<(usize, usize)> },

    #[error("insufficient neighborhood: need {needed} samples, have {available}")]
    InsufficientNeighborhood { needed: usize, available: usize },

    #[error("missing input: {0}")]
    Missing(&'static str),

    /// The normal matrix is numerically singular; the data do not determine
    /// the coefficients uniquely. `null_basis` holds the near-null eigenvectors.
    #[error("recovery is not unique: eigenvalue ratio {ratio:e} below tolerance ({} near-null direction(s))", .null_basis.len())]
    NonUniqueSolution {
        ratio: f64,
        null_basis: Vec<Vec<f64>>,
    },

    #[error("window {index} has {rows}x{cols} samples, need at least 3x3")]
    WindowTooSmall {
        index: usize,
        rows: usize,
        cols: usize,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnstableStep { .. } => 3,
            Error::NonUniqueSolution { .. } => 4,
            Error::Io(_) | Error::Format(_) => 5,
            _ => 2,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDomain(_) => "invalid_domain",
            Error::OutsideDomain { .. } => "outside_domain",
            Error::Config(_) => "config",
            Error::Dimension(_) => "dimension",
            Error::UnstableStep { .. } => "unstable_step",
            Error::SingularSystem => "singular_system",
            Error::NotStored { .. } => "not_stored",
            Error::RankDeficientFit { .. } => "rank_deficient_fit",
            Error::InsufficientNeighborhood { .. } => "insufficient_neighborhood",
            Error::Missing(_) => "missing_input",
            Error::NonUniqueSolution { .. } => "non_unique_solution",
            Error::WindowTooSmall { .. } => "window_too_small",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}
