use std::fmt;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Config does not match the schema, or a value is out of range.
    Schema(String),
    /// A simulation or fit failed.
    Numerical(nvmech::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    pub fn schema(msg: impl Into<String>) -> Self {
        CliError::Schema(msg.into())
    }

    /// Wraps a parameter check made while building the run from a config.
    pub fn field(path: &str, err: nvmech::Error) -> Self {
        match err {
            nvmech::Error::InvalidParameter { reason, .. } => CliError::Schema(format!("{path}: {reason}")),
            nvmech::Error::InvalidInterval { start, end } => {
                CliError::Schema(format!("{path}: interval end {end:e} precedes start {start:e}"))
            }
            other => CliError::Numerical(other),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema(m) => write!(f, "config error: {m}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<nvmech::Error> for CliError {
    fn from(e: nvmech::Error) -> Self {
        CliError::Numerical(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
