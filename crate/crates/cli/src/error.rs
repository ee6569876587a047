use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// The config failed to parse or validate; `path` locates the field.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("fixture error: {0}")]
    Fixture(String),

    #[error(transparent)]
    Core(#[from] specact::Error),

    /// A requested plot series is absent from the report.
    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl HarnessError {
    pub(crate) fn fixture(e: specact::Error) -> Self {
        HarnessError::Fixture(e.to_string())
    }

    pub(crate) fn io(e: impl std::fmt::Display) -> Self {
        HarnessError::Io(e.to_string())
    }

    /// Process exit status for this error: bad configs, fixtures and files
    /// are `2`, failed computations `1`.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } | HarnessError::Fixture(_) | HarnessError::Io(_) => 2,
            _ => 1,
        }
    }
}
