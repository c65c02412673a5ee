use thiserror::Error;

/// Process exit status for each failure class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const TOLERANCE: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Outputs were written but a tolerance check failed.
    #[error("tolerance breach: {}", .0.join("; "))]
    Tolerance(Vec<String>),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => exit::INPUT,
            CliError::Numerical(_) => exit::NUMERICAL,
            CliError::Tolerance(_) => exit::TOLERANCE,
        }
    }

    pub fn input(field: &str, msg: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{field}: {msg}"))
    }
}
