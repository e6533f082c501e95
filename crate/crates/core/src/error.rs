use thiserror::Error;

/// Errors raised by grid construction, field calculus, solves and the
/// scenario front end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),
    #[error("obstacle `{id}` failed derivative self-check: {detail}")]
    ObstacleCheck { id: String, detail: String },
    #[error("scenario line {line}: {msg}")]
    ScenarioLine { line: usize, msg: String },
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
