use thiserror::Error;

/// Errors produced by the estimation pipeline and its kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("insufficient samples: need at least {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("degenerate weights: the tilt exp(t'x) leaves fewer than two effective samples")]
    DegenerateWeights,

    #[error("effective rank {observed} is below the requested rank {requested}")]
    EffectiveRank { requested: usize, observed: usize },

    #[error("eigensolver did not converge after {0} iterations")]
    NonConvergence(usize),

    #[error("ill-conditioned diagonalizer: condition number {0:.3e}")]
    IllConditioned(f64),

    #[error("singular matrix during {0}")]
    Singular(String),

    #[error("only {0} target matrices survived; at least 2 are required")]
    InsufficientTargets(usize),

    #[error("view {0} has all-zero entries; processing-point scale is undefined")]
    ZeroView(usize),

    #[error("tensor of {actual} entries exceeds the naive-oracle guard of {guard}")]
    TensorTooLarge { actual: usize, guard: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps an error with the pipeline stage that produced it.
    pub fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for validation-style errors (bad inputs), false for numerical
    /// failures discovered while computing.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Dimension(_)
            | Error::InsufficientSamples { .. }
            | Error::InvalidParameter(_)
            | Error::TensorTooLarge { .. }
            | Error::ZeroView(_) => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
