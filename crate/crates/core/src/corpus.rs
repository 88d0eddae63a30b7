//! Validated, time-ordered tweet corpora and daily outbreak indicators.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use chrono::{DateTime, NaiveDate, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::{self, DateRange};

/// One line of a tweet archive before validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTweet {
    pub id: String,
    pub created_at: String,
    pub agency: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub agency: String,
    pub text: String,
}

impl TweetRecord {
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }

    /// Archive form; `created_at` is RFC 3339 in UTC with as many fractional
    /// digits as needed to round-trip.
    pub fn to_raw(&self) -> RawTweet {
        RawTweet {
            id: self.id.clone(),
            created_at: self.timestamp.to_rfc3339_opts(SecondsFormat::AutoSi, true),
            agency: self.agency.clone(),
            text: self.text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LineErrorKind {
    #[error("unparseable record: {0}")]
    Parse(String),
    #[error("unparseable created_at {0:?}")]
    Timestamp(String),
    #[error("empty id")]
    EmptyId,
    #[error("empty text")]
    EmptyText,
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("agency {0:?} is not in the configured set")]
    UnknownAgency(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct LineError {
    pub line: usize,
    pub kind: LineErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Line(#[from] LineError),
    #[error("no records survived ingestion")]
    Empty,
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Records dated outside the window are dropped and counted.
    pub window: Option<DateRange>,
    /// Keep only this agency.
    pub agency_filter: Option<String>,
    /// When set, agencies outside this set are malformed lines.
    pub known_agencies: Option<BTreeSet<String>>,
    /// Abort on the first malformed line instead of skipping it.
    pub strict: bool,
    /// Drop retweets (`RT @...`).
    pub drop_retweets: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub accepted: usize,
    pub malformed: Vec<LineError>,
    pub out_of_window: usize,
    pub other_agency: usize,
    pub retweets: usize,
}

impl IngestReport {
    pub fn skipped_count(&self) -> usize {
        self.malformed.len()
    }
}

/// Timestamp-sorted records, optionally restricted to one agency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    agency: Option<String>,
    records: Vec<TweetRecord>,
}

impl Corpus {
    /// Sorts by timestamp (stable) and checks id uniqueness and non-emptiness.
    pub fn new(agency: Option<String>, mut records: Vec<TweetRecord>) -> Result<Self, CorpusError> {
        if records.is_empty() {
            return Err(CorpusError::Empty);
        }
        let mut ids = BTreeSet::new();
        for r in &records {
            if !ids.insert(r.id.as_str()) {
                return Err(CorpusError::DuplicateId(r.id.clone()));
            }
        }
        records.sort_by_key(|r| r.timestamp);
        Ok(Self { agency, records })
    }

    pub fn agency(&self) -> Option<&str> {
        self.agency.as_deref()
    }

    pub fn records(&self) -> &[TweetRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn span(&self) -> DateRange {
        let first = self.records.first().expect("non-empty").date();
        let last = self.records.last().expect("non-empty").date();
        DateRange::new(first, last).expect("sorted")
    }

    /// Distinct agency labels in lexicographic order.
    pub fn agencies(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.records.iter().map(|r| r.agency.as_str()).collect();
        set.into_iter().map(ToString::to_string).collect()
    }
}

fn is_retweet(text: &str) -> bool {
    text.trim_start().starts_with("RT @")
}

fn validate(line: usize, raw: RawTweet, opts: &IngestOptions) -> Result<TweetRecord, LineError> {
    let err = |kind| LineError { line, kind };
    let id = raw.id.trim();
    if id.is_empty() {
        return Err(err(LineErrorKind::EmptyId));
    }
    if raw.text.trim().is_empty() {
        return Err(err(LineErrorKind::EmptyText));
    }
    let timestamp = calendar::parse_timestamp(&raw.created_at)
        .ok_or_else(|| err(LineErrorKind::Timestamp(raw.created_at.clone())))?;
    if let Some(known) = &opts.known_agencies {
        if !known.contains(&raw.agency) {
            return Err(err(LineErrorKind::UnknownAgency(raw.agency)));
        }
    }
    Ok(TweetRecord {
        id: id.to_string(),
        timestamp,
        agency: raw.agency,
        text: raw.text,
    })
}

/// Builds a corpus from numbered archive lines. Each item is either a decoded
/// record or the decoder's message for that line.
///
/// Malformed lines (bad fields, duplicate ids) abort in strict mode and are
/// skipped and recorded otherwise.
pub fn ingest_tweets<I>(lines: I, opts: &IngestOptions) -> Result<(Corpus, IngestReport), CorpusError>
where
    I: IntoIterator<Item = (usize, Result<RawTweet, String>)>,
{
    let mut report = IngestReport::default();
    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    for (line, decoded) in lines {
        let checked = decoded
            .map_err(|msg| LineError { line, kind: LineErrorKind::Parse(msg) })
            .and_then(|raw| validate(line, raw, opts))
            .and_then(|rec| {
                if seen.contains(&rec.id) {
                    Err(LineError { line, kind: LineErrorKind::DuplicateId(rec.id) })
                } else {
                    Ok(rec)
                }
            });
        let rec = match checked {
            Ok(rec) => rec,
            Err(e) if opts.strict => return Err(e.into()),
            Err(e) => {
                report.malformed.push(e);
                continue;
            }
        };
        if opts.agency_filter.as_ref().is_some_and(|a| *a != rec.agency) {
            report.other_agency += 1;
            continue;
        }
        if opts.drop_retweets && is_retweet(&rec.text) {
            report.retweets += 1;
            continue;
        }
        if opts.window.is_some_and(|w| !w.contains(rec.date())) {
            report.out_of_window += 1;
            continue;
        }
        seen.insert(rec.id.clone());
        records.push(rec);
    }
    report.accepted = records.len();
    let corpus = Corpus::new(opts.agency_filter.clone(), records)?;
    Ok((corpus, report))
}

/// Records of one calendar day, as indices into the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DaySlice {
    pub date: NaiveDate,
    pub records: Vec<usize>,
}

/// One slice per UTC day of the corpus span, empty days included.
pub fn slice_by_day(corpus: &Corpus) -> Vec<DaySlice> {
    calendar::bucket_by_day(corpus.records.iter().map(TweetRecord::date))
        .into_iter()
        .map(|(date, records)| DaySlice { date, records })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorDay {
    pub new_cases: u64,
    pub new_deaths: u64,
    /// True when the day was missing from the source and zero-filled.
    pub filled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorRow {
    pub line: usize,
    pub date: NaiveDate,
    pub new_cases: i64,
    pub new_deaths: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndicatorError {
    #[error("line {line}: negative count")]
    NegativeCount { line: usize },
    #[error("line {line}: duplicate date {date}")]
    DuplicateDate { line: usize, date: NaiveDate },
    #[error("indicator table has no rows")]
    Empty,
}

/// Contiguous daily new-case / new-death counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorSeries {
    range: DateRange,
    days: Vec<IndicatorDay>,
}

impl IndicatorSeries {
    /// Rows may arrive in any order; interior gaps are zero-filled.
    pub fn from_rows(rows: Vec<IndicatorRow>) -> Result<Self, IndicatorError> {
        let mut by_date = BTreeMap::new();
        for row in rows {
            if row.new_cases < 0 || row.new_deaths < 0 {
                return Err(IndicatorError::NegativeCount { line: row.line });
            }
            let line = row.line;
            let date = row.date;
            if by_date.insert(date, row).is_some() {
                return Err(IndicatorError::DuplicateDate { line, date });
            }
        }
        let (Some((&first, _)), Some((&last, _))) = (by_date.first_key_value(), by_date.last_key_value())
        else {
            return Err(IndicatorError::Empty);
        };
        let range = DateRange::new(first, last).expect("ordered keys");
        let days = range
            .days()
            .map(|d| match by_date.get(&d) {
                Some(r) => IndicatorDay {
                    new_cases: r.new_cases as u64,
                    new_deaths: r.new_deaths as u64,
                    filled: false,
                },
                None => IndicatorDay { new_cases: 0, new_deaths: 0, filled: true },
            })
            .collect();
        Ok(Self { range, days })
    }

    pub fn range(&self) -> DateRange {
        self.range
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn fill_count(&self) -> usize {
        self.days.iter().filter(|d| d.filled).count()
    }

    pub fn get(&self, date: NaiveDate) -> Option<&IndicatorDay> {
        self.range.index_of(date).map(|i| &self.days[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, &IndicatorDay)> + '_ {
        self.range.days().zip(self.days.iter())
    }
}
