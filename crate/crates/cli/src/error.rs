use std::path::PathBuf;

use thiserror::Error;

/// Pipeline failure, tagged with the stage that produced it.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("config error: input file not found: {}", .0.display())]
    MissingInput(PathBuf),

    #[error("[{stage}] {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: hrisk_core::Error,
    },

    #[error("[{stage}] {message}")]
    Output {
        stage: &'static str,
        message: String,
    },
}

impl CliError {
    pub fn stage(stage: &'static str) -> impl Fn(hrisk_core::Error) -> Self {
        move |source| Self::Stage { stage, source }
    }

    pub fn output(stage: &'static str) -> impl Fn(std::io::Error) -> Self {
        move |e| Self::Output {
            stage,
            message: e.to_string(),
        }
    }

    /// 1 for configuration problems, 2 for input data, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use hrisk_core::Error as E;
        match self {
            Self::Config(_) => 1,
            Self::MissingInput(_) | Self::Output { .. } => 2,
            Self::Stage { source, .. } => match source {
                E::FileNotFound(_)
                | E::Io(_)
                | E::Csv(_)
                | E::Parse { .. }
                | E::GapInDates { .. }
                | E::UnorderedDates(_)
                | E::MissingValue { .. }
                | E::MissingColumn(_)
                | E::DuplicateColumn(_)
                | E::NonFinite(_)
                | E::NonPositiveValue(_)
                | E::SchemaMismatch(_)
                | E::DateMisalignment(_)
                | E::AlignmentEmpty => 2,
                _ => 3,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
