use bofscan_core::Error;

/// Exit status contract.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Error,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn stage(stage: &'static str, source: Error) -> Self {
        CliError::Stage { stage, source }
    }

    /// Wraps a core error raised while interpreting user input.
    pub fn from_core_usage(e: Error) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Stage { source: Error::UnknownMethod { .. }, .. } => EXIT_USAGE,
            CliError::Stage { source, .. } if source.is_numeric() => EXIT_NUMERIC,
            CliError::Stage { .. } => EXIT_DATA,
        }
    }
}

/// Tags a core result with the stage it came from.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> CliResult<T>;
}

impl<T> StageExt<T> for bofscan_core::Result<T> {
    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|e| CliError::stage(stage, e))
    }
}
