use dephasing_core::Error as CoreError;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(field: &str, msg: impl std::fmt::Display) -> Self {
        CliError::Config(format!("{field}: {msg}"))
    }

    /// Process exit status: 2 config, 3 numeric, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidArgument(_) => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
