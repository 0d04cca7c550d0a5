use deepwifi::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] Error),

    #[error("configuration: {0}")]
    Config(String),

    #[error("{0} self-test check(s) failed")]
    Acceptance(usize),
}

impl CliError {
    /// 1 for configuration and artifact problems, 2 for numeric failures,
    /// 3 for failed self-test checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Acceptance(_) => 3,
            CliError::Core(e) => match e {
                Error::NonFinite(_)
                | Error::Diverged { .. }
                | Error::InvalidTarget(_)
                | Error::PreambleNotDetected { .. }
                | Error::Empty(_) => 2,
                Error::DimensionMismatch { .. }
                | Error::InvalidConfig(_)
                | Error::Version { .. }
                | Error::Malformed { .. }
                | Error::Io { .. }
                | Error::Csv(_)
                | Error::Toml(_) => 1,
            },
        }
    }
}
