use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Evaluation point outside the function's domain, or a non-finite value.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at byte {position}: expected {expected}")]
    Parse { position: usize, expected: String },

    /// `A_eps` has no witness on the candidate point set.
    #[error(
        "empty level set: epsilon {epsilon} exceeds the grid range spread {spread} \
         (epsilon is at least M, or the grid is too coarse to witness it)"
    )]
    EmptyLevelSet { epsilon: f64, spread: f64 },

    #[error("no closed form for {0}")]
    UnsupportedFamily(String),

    #[error("epsilon out of range: {0}")]
    OutOfRange(String),

    #[error("net level {level} exceeds the maximum of {max}")]
    LevelTooLarge { level: u32, max: u32 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("not a self-map: f({x}) = {fx} leaves [{lo}, {hi}]")]
    NotSelfMap { x: f64, fx: f64, lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A profile sample failed; `index` is the position in the caller's epsilon list.
    #[error("sample {index} (epsilon = {epsilon}) failed: {source}")]
    Sample {
        index: usize,
        epsilon: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Errors that stem from bad input text or arguments rather than from the mathematics.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Parse { .. } | Error::InvalidArgument(_) => true,
            Error::Sample { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
