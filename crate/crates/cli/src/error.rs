use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad config file or invalid parameter values.
    #[error("config: {0}")]
    Config(String),
    /// Missing or malformed corpus files, or data that cannot support the request.
    #[error("{0}")]
    Input(String),
    /// The target exists and `--force` was not given.
    #[error("refusing to overwrite {} existing file(s), first {}; pass --force to replace them", .count, .first.display())]
    Collision { count: usize, first: PathBuf },
    #[error("internal: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Input(_) | CliError::Collision { .. } => EXIT_INPUT,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<fretalign::music::MusicError> for CliError {
    fn from(e: fretalign::music::MusicError) -> Self {
        use fretalign::music::MusicError as M;
        match e {
            M::InfeasibleExercise(_) | M::InvalidString(_) => CliError::Config(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<fretalign::audio::AudioError> for CliError {
    fn from(e: fretalign::audio::AudioError) -> Self {
        use fretalign::audio::AudioError as A;
        match e {
            A::InfeasibleSynth(_) => CliError::Config(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<fretalign::features::FeatureError> for CliError {
    fn from(e: fretalign::features::FeatureError) -> Self {
        use fretalign::features::FeatureError as F;
        match e {
            F::InvalidConfig(_) => CliError::Config(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<fretalign::hmm::HmmError> for CliError {
    fn from(e: fretalign::hmm::HmmError) -> Self {
        use fretalign::hmm::HmmError as H;
        match e {
            H::InvalidConfig(_) => CliError::Config(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<fretalign::annot::AnnotError> for CliError {
    fn from(e: fretalign::annot::AnnotError) -> Self {
        CliError::Input(e.to_string())
    }
}
