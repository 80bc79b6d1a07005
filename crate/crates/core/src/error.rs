use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no finite eigenvalue near the requested target {0}")]
    NoMasterMode(f64),
    #[error("normalisation pivot is zero")]
    ZeroPivot,
    #[error("ill-conditioned homological system at {monomial} (condition estimate {condition:.3e})")]
    IllConditioned { monomial: String, condition: f64 },
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("reduced dynamics depend on the phase; a normal-form expansion is required")]
    NotNormalForm,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by user input rather than the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidSystem(_) | Error::Config(_) | Error::Json(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
