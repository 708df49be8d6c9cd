use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid point for space: {0}")]
    InvalidPoint(String),

    #[error("transport failed: {0}")]
    Transport(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("negative mass {weight:e} produced at support point {index} ({point})")]
    NegativeMass {
        index: usize,
        point: String,
        weight: f64,
    },

    #[error("step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("model validation failed: {0}")]
    Validation(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("linear program: {0}")]
    Lp(String),

    #[error("oracle supports at most {max} points, got {got}")]
    OracleSize { max: usize, got: usize },

    #[error("observation time {0} is not a solver time")]
    MissingObservationTime(f64),

    #[error("degenerate posterior: {0}")]
    DegeneratePosterior(String),

    #[error("posterior grids differ")]
    GridMismatch,

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }
}
