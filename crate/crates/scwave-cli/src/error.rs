use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] scwave::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use scwave::Error as E;
        match self {
            CliError::Core(
                E::NonConvergence { .. } | E::Bracket { .. } | E::NoCrossing(_) | E::VanishingDenominator | E::TooFewSamples(_),
            ) => EXIT_NUMERIC,
            _ => EXIT_CONFIG,
        }
    }
}

pub fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
