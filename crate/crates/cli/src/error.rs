use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("cell ({params}, M={cells}, N={steps}) failed: {source}")]
    Cell {
        params: String,
        cells: usize,
        steps: usize,
        source: tfk_core::Error,
    },
    #[error(transparent)]
    Solver(#[from] tfk_core::Error),
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("malformed report: {0}")]
    Parse(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
