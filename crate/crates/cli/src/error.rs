use std::fmt;

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable, unparsable or structurally invalid input (exit 2).
    Malformed(String),
    /// An artifact failed re-verification (exit 4).
    Verification(String),
    /// A numeric domain error such as a dilation input with norm above 1 (exit 5).
    Domain(String),
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_MALFORMED: u8 = 2;
pub const EXIT_RESIDUAL: u8 = 3;
pub const EXIT_VERIFICATION: u8 = 4;
pub const EXIT_DOMAIN: u8 = 5;

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Malformed(_) => EXIT_MALFORMED,
            CliError::Verification(_) => EXIT_VERIFICATION,
            CliError::Domain(_) => EXIT_DOMAIN,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Malformed(m) => write!(f, "malformed input: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Domain(m) => write!(f, "numeric domain error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<mufact::Error> for CliError {
    fn from(e: mufact::Error) -> Self {
        use mufact::Error as E;
        match e {
            E::NotAFactorisation { .. } | E::NotBlockDiagonal { .. } => CliError::Verification(e.to_string()),
            E::NormTooLarge { .. } | E::NoConvergence { .. } => CliError::Domain(e.to_string()),
            E::ShapeMismatch(_)
            | E::NotHermitian { .. }
            | E::NotPsd { .. }
            | E::NotCp { .. }
            | E::NotUnitary { .. }
            | E::DimensionTooLarge { .. }
            | E::InvalidInput(_) => CliError::Malformed(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Malformed(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
