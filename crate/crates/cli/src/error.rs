use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<dpsa::Error> for CliError {
    fn from(e: dpsa::Error) -> Self {
        use dpsa::Error as E;
        match e {
            E::Parameter(_) | E::Domain(_) | E::Unsupported(_) => CliError::Config(vec![e.to_string()]),
            E::NoSolution(_) | E::Numerical(_) | E::UndefinedIndex(_) => CliError::Numerical(e.to_string()),
            E::Ingest { .. } | E::Io(_) => CliError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
