use std::fmt;

/// Failure of a subcommand, carrying its exit code class.
#[derive(Debug)]
pub enum CliError {
    /// Bad or missing configuration; exit code 2.
    Config(String),
    /// Numerical failure or failed self-check; exit code 1.
    Numerical(String),
    /// Output could not be written; exit code 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<stepflow::Error> for CliError {
    fn from(e: stepflow::Error) -> Self {
        use stepflow::Error as E;
        match e {
            E::SingularPoint | E::StepRejected(_) => CliError::Numerical(e.to_string()),
            E::InvalidMaterial(_)
            | E::Degenerate(_)
            | E::InvalidGrid(_)
            | E::NonZeroMean { .. }
            | E::GridMismatch
            | E::InvalidProfile(_)
            | E::InvalidSweep(_)
            | E::InvalidConfig(_) => CliError::Config(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
