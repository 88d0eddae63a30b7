//! Versioned JSON artifacts passed between subcommands.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crisiscomm_core::calendar::{parse_date, DateRange};
use crisiscomm_core::corpus::{IndicatorSeries, IngestReport};
use crisiscomm_core::dtm::DtmModel;
use crisiscomm_core::lda::{CoherenceReport, LdaModel};
use crisiscomm_core::preprocess::Vocabulary;
use crisiscomm_core::sentiment::{DaySentiment, SentimentSeries};
use num_rational::BigRational;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const VERSION: u32 = 1;

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const INGEST_FILE: &str = "ingest.json";
pub const INDICATORS_FILE: &str = "indicators.json";
pub const LDA_FILE: &str = "lda.json";
pub const DTM_FILE: &str = "dtm.json";
pub const SENTIMENT_FILE: &str = "sentiment.json";
pub const CONFIG_ECHO_FILE: &str = "run.cfg";

/// Artifacts that carry a format tag and version.
pub trait Versioned {
    const FORMAT: &'static str;
    fn header(&self) -> (&str, u32);
}

/// SHA-256 over the tokens in id order, newline terminated.
pub fn vocab_hash(vocab: &Vocabulary) -> String {
    let mut h = Sha256::new();
    for t in vocab.tokens() {
        h.update(t.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaArtifact {
    pub format: String,
    pub version: u32,
    pub vocab_hash: String,
    pub vocabulary: Vec<String>,
    pub coherence: CoherenceReport,
    pub model: LdaModel,
}

impl LdaArtifact {
    pub fn new(vocab: &Vocabulary, coherence: CoherenceReport, model: LdaModel) -> Self {
        Self {
            format: Self::FORMAT.into(),
            version: VERSION,
            vocab_hash: vocab_hash(vocab),
            vocabulary: vocab.tokens().to_vec(),
            coherence,
            model,
        }
    }
}

impl Versioned for LdaArtifact {
    const FORMAT: &'static str = "crisiscomm-lda";
    fn header(&self) -> (&str, u32) {
        (&self.format, self.version)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtmArtifact {
    pub format: String,
    pub version: u32,
    pub vocab_hash: String,
    pub vocabulary: Vec<String>,
    pub model: DtmModel,
}

impl DtmArtifact {
    pub fn new(vocab: &Vocabulary, model: DtmModel) -> Self {
        Self {
            format: Self::FORMAT.into(),
            version: VERSION,
            vocab_hash: vocab_hash(vocab),
            vocabulary: vocab.tokens().to_vec(),
            model,
        }
    }
}

impl Versioned for DtmArtifact {
    const FORMAT: &'static str = "crisiscomm-dtm";
    fn header(&self) -> (&str, u32) {
        (&self.format, self.version)
    }
}

/// Daily means as exact `numerator/denominator` strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentDay {
    pub date: String,
    pub count: usize,
    pub mean: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentArtifact {
    pub format: String,
    pub version: u32,
    pub negation: bool,
    pub days: Vec<SentimentDay>,
}

impl SentimentArtifact {
    pub fn new(series: &SentimentSeries, negation: bool) -> Self {
        let days = series
            .iter()
            .map(|(d, s)| SentimentDay {
                date: d.to_string(),
                count: s.count,
                mean: s.mean.as_ref().map(ToString::to_string),
            })
            .collect();
        Self { format: Self::FORMAT.into(), version: VERSION, negation, days }
    }

    pub fn to_series(&self, path: &Path) -> Result<SentimentSeries> {
        let bad = |m: String| CliError::format(path, m);
        let dates = self
            .days
            .iter()
            .map(|d| parse_date(&d.date).ok_or_else(|| bad(format!("bad date `{}`", d.date))))
            .collect::<Result<Vec<_>>>()?;
        let (first, last) = match (dates.first(), dates.last()) {
            (Some(&f), Some(&l)) => (f, l),
            _ => return Err(bad("no days".into())),
        };
        let range = DateRange::new(first, last).ok_or_else(|| bad("days out of order".into()))?;
        if range.len() != dates.len() || range.days().zip(&dates).any(|(a, b)| a != *b) {
            return Err(bad("days are not contiguous".into()));
        }
        let days = self
            .days
            .iter()
            .map(|d| {
                let mean = d
                    .mean
                    .as_deref()
                    .map(|m| BigRational::from_str(m).map_err(|_| bad(format!("bad rational `{m}`"))))
                    .transpose()?;
                Ok(DaySentiment { mean, count: d.count })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SentimentSeries::new(range, days))
    }
}

impl Versioned for SentimentArtifact {
    const FORMAT: &'static str = "crisiscomm-sentiment";
    fn header(&self) -> (&str, u32) {
        (&self.format, self.version)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedLine {
    pub line: usize,
    pub error: String,
}

/// What `ingest` kept and dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub accepted: usize,
    pub skipped: Vec<SkippedLine>,
    pub out_of_window: usize,
    pub other_agency: usize,
    pub retweets: usize,
    pub span_start: String,
    pub span_end: String,
    pub agencies: Vec<String>,
    pub indicator_start: String,
    pub indicator_end: String,
    pub indicator_days: usize,
    pub indicator_filled_days: usize,
}

impl IngestSummary {
    pub fn new(report: &IngestReport, span: DateRange, agencies: Vec<String>, indicators: &IndicatorSeries) -> Self {
        Self {
            accepted: report.accepted,
            skipped: report
                .malformed
                .iter()
                .map(|e| SkippedLine { line: e.line, error: e.kind.to_string() })
                .collect(),
            out_of_window: report.out_of_window,
            other_agency: report.other_agency,
            retweets: report.retweets,
            span_start: span.start.to_string(),
            span_end: span.end.to_string(),
            agencies,
            indicator_start: indicators.range().start.to_string(),
            indicator_end: indicators.range().end.to_string(),
            indicator_days: indicators.len(),
            indicator_filled_days: indicators.fill_count(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::format(path, e))?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(CliError::io(path))
}

fn read_bytes(path: &Path, remedy: &'static str) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => CliError::MissingArtifact { path: path.to_path_buf(), remedy },
        _ => CliError::Io { path: path.to_path_buf(), source: e },
    })
}

/// Reads a plain JSON artifact; a missing file names the command producing it.
pub fn read_json<T: DeserializeOwned>(path: &Path, remedy: &'static str) -> Result<T> {
    serde_json::from_slice(&read_bytes(path, remedy)?).map_err(|e| CliError::format(path, e))
}

/// As `read_json`, and rejects other formats or versions as stale.
pub fn read_versioned<T: DeserializeOwned + Versioned>(path: &Path, remedy: &'static str) -> Result<T> {
    let value: T = read_json(path, remedy)?;
    if value.header() != (T::FORMAT, VERSION) {
        return Err(CliError::StaleArtifact { path: path.to_path_buf(), remedy });
    }
    Ok(value)
}

/// Fails with `StaleArtifact` unless the artifact was fit on `vocab`.
pub fn check_vocab(hash: &str, vocab: &Vocabulary, path: PathBuf, remedy: &'static str) -> Result<()> {
    if hash == vocab_hash(vocab) {
        Ok(())
    } else {
        Err(CliError::StaleArtifact { path, remedy })
    }
}
