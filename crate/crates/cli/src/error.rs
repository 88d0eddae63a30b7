use std::io;
use std::path::PathBuf;

use crisiscomm_core::chronology::ChronologyError;
use crisiscomm_core::corpus::{CorpusError, IndicatorError};
use crisiscomm_core::dtm::DtmError;
use crisiscomm_core::lda::LdaError;
use crisiscomm_core::preprocess::PreprocessError;
use crisiscomm_core::sentiment::SentimentError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing artifact {}: run `crisiscomm {remedy}` first", path.display())]
    MissingArtifact { path: PathBuf, remedy: &'static str },
    #[error("artifact {} is out of date with the corpus or config: rerun `crisiscomm {remedy}`", path.display())]
    StaleArtifact { path: PathBuf, remedy: &'static str },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("indicators: {0}")]
    Indicator(#[from] IndicatorError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Lda(#[from] LdaError),
    #[error(transparent)]
    Dtm(#[from] DtmError),
    #[error(transparent)]
    Sentiment(#[from] SentimentError),
    #[error(transparent)]
    Chronology(#[from] ChronologyError),
}

impl CliError {
    /// 1 config, 2 missing or stale upstream artifact, 3 data.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::MissingArtifact { .. } | CliError::StaleArtifact { .. } => 2,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> CliError {
        CliError::Format { path: path.into(), message: message.to_string() }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
