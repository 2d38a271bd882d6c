use std::fmt;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Output did not match the reference product.
    Verify(String),
    /// Unreadable or malformed input file.
    Input(String),
    /// A configuration the kernels cannot run (budget, shape, bad values).
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Input(_) => 2,
            CliError::Config(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Verify(m) => write!(f, "verification failed: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<nmvec::io::FormatError> for CliError {
    fn from(e: nmvec::io::FormatError) -> Self {
        CliError::Input(e.to_string())
    }
}
