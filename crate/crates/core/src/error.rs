use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid grid function: {0}")]
    InvalidGrid(String),
    #[error("grid too short: {0}")]
    GridTooShort(String),
    #[error("objective is +inf for every t at x = {0}")]
    InfiniteObjective(f64),
    #[error("no sign change found: {0}")]
    NoBracket(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("certificate impossible: {0}")]
    Certificate(String),
    #[error("config: {0}")]
    Config(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn at(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
