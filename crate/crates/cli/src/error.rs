use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("step `{step}` failed: {msg}")]
    Step { step: &'static str, msg: String },
}

impl CliError {
    pub fn step(step: &'static str, e: impl std::fmt::Display) -> Self {
        CliError::Step { step, msg: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Step { .. } => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
