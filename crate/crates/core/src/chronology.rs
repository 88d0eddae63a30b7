//! Timelines: topic frequency per day, the four policy periods of the first
//! wave, per-period vocabulary, and the date-aligned join of topics,
//! sentiment and outbreak indicators.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use chrono::NaiveDate;
use num_rational::BigRational;
use thiserror::Error;

use crate::calendar::{ymd, DateRange};
use crate::corpus::IndicatorSeries;
use crate::dtm::DtmModel;
use crate::lda::{argmax, top_ids, topic_top_words, LdaModel};
use crate::preprocess::{BowCorpus, BowDocument, TokenId};
use crate::sentiment::{rolling_mean, weighted_mean, SentimentError, SentimentSeries};

/// Words per topic label.
pub const LABEL_WORDS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChronologyError {
    #[error("{date} is outside the analysis window {start}..={end}")]
    OutOfWindow { date: NaiveDate, start: NaiveDate, end: NaiveDate },
    #[error("model covers {model} documents, corpus has {corpus}")]
    DocumentMismatch { model: usize, corpus: usize },
    #[error("model vocabulary has {model} words, corpus has {corpus}")]
    VocabularyMismatch { model: usize, corpus: usize },
    #[error("document dated {0} falls in no model slice")]
    NoSlice(NaiveDate),
    #[error("corpus has no documents")]
    EmptyCorpus,
    #[error("periods must be non-empty, ordered and contiguous")]
    BadSegmentation,
    #[error("top-word count must be at least one")]
    ZeroTopWords,
    #[error("no input series overlaps the analysis window")]
    EmptyOverlap,
    #[error(transparent)]
    Sentiment(#[from] SentimentError),
}

/// A fitted model whose topics can be attributed to documents.
#[derive(Debug, Clone, Copy)]
pub enum TopicModel<'a> {
    Lda(&'a LdaModel),
    Dtm(&'a DtmModel),
}

impl TopicModel<'_> {
    pub fn k(&self) -> usize {
        match self {
            TopicModel::Lda(m) => m.k(),
            TopicModel::Dtm(m) => m.k(),
        }
    }

    /// Top words of each topic; for a dynamic model, of its mean over slices.
    pub fn top_words(&self, n: usize) -> Vec<Vec<TokenId>> {
        match self {
            TopicModel::Lda(m) => (0..m.k()).map(|k| topic_top_words(m, k, n)).collect(),
            TopicModel::Dtm(m) => {
                let v = m.vocab_size();
                let mut avg = vec![vec![0.0; v]; m.k()];
                for t in 0..m.num_slices() {
                    for (k, row) in m.topic_means(t).into_iter().enumerate() {
                        for (a, p) in avg[k].iter_mut().zip(row) {
                            *a += p;
                        }
                    }
                }
                avg.iter().map(|row| top_ids(row, n)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FrequencyMode {
    /// Count each document once, for its dominant topic.
    #[default]
    Hard,
    /// Sum each document's topic weights.
    Soft,
}

/// Per-day topic frequencies over a contiguous date range.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicFrequencySeries {
    range: DateRange,
    mode: FrequencyMode,
    labels: Vec<String>,
    /// `[day][topic]`.
    values: Vec<Vec<f64>>,
    doc_counts: Vec<usize>,
}

impl TopicFrequencySeries {
    pub fn range(&self) -> DateRange {
        self.range
    }

    pub fn mode(&self) -> FrequencyMode {
        self.mode
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    /// Top words of each topic, space separated.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, date: NaiveDate) -> Option<&[f64]> {
        self.range.index_of(date).map(|i| self.values[i].as_slice())
    }

    pub fn doc_count(&self, date: NaiveDate) -> Option<usize> {
        self.range.index_of(date).map(|i| self.doc_counts[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, &[f64])> + '_ {
        self.range.days().zip(self.values.iter().map(Vec::as_slice))
    }
}

/// Attributes every document of `bow` to topics of `model` and sums per day.
pub fn topic_frequency(
    model: TopicModel<'_>,
    bow: &BowCorpus,
    mode: FrequencyMode,
) -> Result<TopicFrequencySeries, ChronologyError> {
    let first = bow.docs().first().ok_or(ChronologyError::EmptyCorpus)?;
    let last = bow.docs().last().ok_or(ChronologyError::EmptyCorpus)?;
    let range = DateRange::new(first.date(), last.date()).expect("documents are time ordered");
    let k = model.k();
    let v = match model {
        TopicModel::Lda(m) => {
            if m.num_docs() != bow.len() {
                return Err(ChronologyError::DocumentMismatch { model: m.num_docs(), corpus: bow.len() });
            }
            m.vocab_size()
        }
        TopicModel::Dtm(m) => m.vocab_size(),
    };
    if v != bow.vocab().len() {
        return Err(ChronologyError::VocabularyMismatch { model: v, corpus: bow.vocab().len() });
    }

    let mut values = vec![vec![0.0; k]; range.len()];
    let mut doc_counts = vec![0usize; range.len()];
    for (d, doc) in bow.docs().iter().enumerate() {
        let day = range.index_of(doc.date()).expect("inside span");
        let weights = doc_weights(model, d, doc)?;
        match mode {
            FrequencyMode::Hard => values[day][argmax(&weights)] += 1.0,
            FrequencyMode::Soft => {
                for (acc, w) in values[day].iter_mut().zip(&weights) {
                    *acc += w;
                }
            }
        }
        doc_counts[day] += 1;
    }

    let labels = model
        .top_words(LABEL_WORDS)
        .iter()
        .map(|ids| bow.vocab().words(ids).join(" "))
        .collect();
    Ok(TopicFrequencySeries { range, mode, labels, values, doc_counts })
}

fn doc_weights(model: TopicModel<'_>, d: usize, doc: &BowDocument) -> Result<Vec<f64>, ChronologyError> {
    match model {
        TopicModel::Lda(m) => Ok(m.theta[d].clone()),
        TopicModel::Dtm(m) => {
            let t = m.slice_of(doc.date()).ok_or(ChronologyError::NoSlice(doc.date()))?;
            Ok(m.doc_topic_weights(t, doc))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Period {
    pub id: String,
    pub name: String,
    pub range: DateRange,
}

/// Ordered, contiguous, inclusive periods.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodSegmentation {
    periods: Vec<Period>,
}

impl PeriodSegmentation {
    pub fn new(periods: Vec<Period>) -> Result<Self, ChronologyError> {
        if periods.is_empty() {
            return Err(ChronologyError::BadSegmentation);
        }
        for w in periods.windows(2) {
            if w[0].range.end.succ_opt() != Some(w[1].range.start) {
                return Err(ChronologyError::BadSegmentation);
            }
        }
        Ok(Self { periods })
    }

    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    pub fn window(&self) -> DateRange {
        DateRange::new(self.periods[0].range.start, self.periods[self.periods.len() - 1].range.end)
            .expect("contiguous periods")
    }

    /// Index of the period holding `date`.
    pub fn index_of(&self, date: NaiveDate) -> Result<usize, ChronologyError> {
        self.periods.iter().position(|p| p.range.contains(date)).ok_or_else(|| {
            let w = self.window();
            ChronologyError::OutOfWindow { date, start: w.start, end: w.end }
        })
    }

    pub fn assign(&self, date: NaiveDate) -> Result<&Period, ChronologyError> {
        self.index_of(date).map(|i| &self.periods[i])
    }
}

/// Lockdown and reopening phases of the 2020-02-21..2020-06-06 window.
pub fn default_segmentation() -> PeriodSegmentation {
    let p = |id: &str, name: &str, s: NaiveDate, e: NaiveDate| Period {
        id: id.to_string(),
        name: name.to_string(),
        range: DateRange::new(s, e).expect("ordered"),
    };
    PeriodSegmentation::new(vec![
        p("P1", "Before the lockdown", ymd(2020, 2, 21), ymd(2020, 3, 19)),
        p("P2", "Beginning of the lockdown", ymd(2020, 3, 20), ymd(2020, 4, 10)),
        p("P3", "During the lockdown", ymd(2020, 4, 11), ymd(2020, 5, 10)),
        p("P4", "Re-opening phase", ymd(2020, 5, 11), ymd(2020, 6, 6)),
    ])
    .expect("contiguous")
}

/// Most frequent words of one period, by document frequency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodTopWords {
    pub period: usize,
    pub docs: usize,
    /// `(token, documents containing it)`, descending, ties by token id.
    pub words: Vec<(TokenId, u32)>,
}

impl PeriodTopWords {
    /// True when no document fell in the period; callers should warn.
    pub fn is_empty(&self) -> bool {
        self.docs == 0
    }
}

/// Top `n` words per period over documents accepted by `keep`.
pub fn top_words_by_period_where<F>(
    bow: &BowCorpus,
    seg: &PeriodSegmentation,
    n: usize,
    mut keep: F,
) -> Result<Vec<PeriodTopWords>, ChronologyError>
where
    F: FnMut(&BowDocument) -> bool,
{
    if n == 0 {
        return Err(ChronologyError::ZeroTopWords);
    }
    let v = bow.vocab().len();
    let mut df = vec![vec![0u32; v]; seg.periods().len()];
    let mut docs = vec![0usize; seg.periods().len()];
    for doc in bow.docs().iter().filter(|d| keep(d)) {
        let Ok(p) = seg.index_of(doc.date()) else { continue };
        docs[p] += 1;
        for &(w, _) in &doc.counts {
            df[p][w as usize] += 1;
        }
    }
    Ok(df
        .into_iter()
        .zip(docs)
        .enumerate()
        .map(|(period, (counts, docs))| {
            let mut ids: Vec<TokenId> = (0..v as TokenId).filter(|&w| counts[w as usize] > 0).collect();
            ids.sort_by(|&a, &b| counts[b as usize].cmp(&counts[a as usize]).then(a.cmp(&b)));
            ids.truncate(n);
            PeriodTopWords { period, docs, words: ids.into_iter().map(|w| (w, counts[w as usize])).collect() }
        })
        .collect())
}

pub fn top_words_by_period(
    bow: &BowCorpus,
    seg: &PeriodSegmentation,
    n: usize,
) -> Result<Vec<PeriodTopWords>, ChronologyError> {
    top_words_by_period_where(bow, seg, n, |_| true)
}

/// `top_words_by_period` separately for every agency in the corpus.
pub fn top_words_by_agency(
    bow: &BowCorpus,
    seg: &PeriodSegmentation,
    n: usize,
) -> Result<BTreeMap<String, Vec<PeriodTopWords>>, ChronologyError> {
    let agencies: alloc::collections::BTreeSet<&str> = bow.docs().iter().map(|d| d.agency.as_str()).collect();
    agencies
        .into_iter()
        .map(|a| Ok((a.to_string(), top_words_by_period_where(bow, seg, n, |d| d.agency == a)?)))
        .collect()
}

/// One date of the joined timeline. `None` marks an undefined cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedRow {
    pub date: NaiveDate,
    pub period: usize,
    pub topics: Vec<Option<f64>>,
    pub sentiment_raw: Option<BigRational>,
    pub sentiment_rolling: Option<BigRational>,
    pub new_cases: Option<u64>,
    pub new_deaths: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodSummary {
    pub period: usize,
    pub days: usize,
    pub tweets: usize,
    /// Tweet-weighted mean of daily sentiment.
    pub mean_sentiment: Option<BigRational>,
    pub total_cases: u64,
    pub total_deaths: u64,
    /// Top words over all agencies, as strings.
    pub top_words: Vec<(String, u32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedReport {
    pub segmentation: PeriodSegmentation,
    pub topic_labels: Vec<String>,
    pub rolling_window: usize,
    pub rows: Vec<AlignedRow>,
    pub periods: Vec<PeriodSummary>,
    /// Per agency, per period top words.
    pub agency_top_words: BTreeMap<String, Vec<Vec<(String, u32)>>>,
}

impl AlignedReport {
    pub fn window(&self) -> DateRange {
        self.segmentation.window()
    }

    /// Fills per-period and per-agency top-word tables from `bow`.
    pub fn with_top_words(mut self, bow: &BowCorpus, n: usize) -> Result<Self, ChronologyError> {
        let named = |t: &PeriodTopWords| -> Vec<(String, u32)> {
            t.words.iter().map(|&(w, c)| (bow.vocab().token(w).to_string(), c)).collect()
        };
        for t in top_words_by_period(bow, &self.segmentation, n)? {
            self.periods[t.period].top_words = named(&t);
        }
        self.agency_top_words = top_words_by_agency(bow, &self.segmentation, n)?
            .into_iter()
            .map(|(a, tables)| (a, tables.iter().map(named).collect()))
            .collect();
        Ok(self)
    }
}

/// Outer join of the three series on the segmentation window, one row per
/// date. The rolling mean is computed on the full sentiment series first, so
/// early window days can draw on days before the window.
pub fn align(
    tf: &TopicFrequencySeries,
    ss: &SentimentSeries,
    is: &IndicatorSeries,
    seg: &PeriodSegmentation,
    rolling_window: usize,
) -> Result<AlignedReport, ChronologyError> {
    let window = seg.window();
    if [tf.range(), ss.range(), is.range()].iter().all(|r| window.intersect(r).is_none()) {
        return Err(ChronologyError::EmptyOverlap);
    }
    let rolling = rolling_mean(ss, rolling_window)?;
    let k = tf.k();
    let mut rows = Vec::with_capacity(window.len());
    for date in window.days() {
        let period = seg.index_of(date).expect("window date");
        let topics = match tf.get(date) {
            Some(v) => v.iter().copied().map(Some).collect(),
            None => vec![None; k],
        };
        let day = is.get(date);
        rows.push(AlignedRow {
            date,
            period,
            topics,
            sentiment_raw: ss.get(date).and_then(|d| d.mean.clone()),
            sentiment_rolling: rolling.get(date).and_then(|d| d.mean.clone()),
            new_cases: day.map(|d| d.new_cases),
            new_deaths: day.map(|d| d.new_deaths),
        });
    }

    let periods = seg
        .periods()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let in_period = rows.iter().filter(|r| r.period == i);
            PeriodSummary {
                period: i,
                days: p.range.len(),
                tweets: p.range.days().filter_map(|d| ss.get(d)).map(|d| d.count).sum(),
                mean_sentiment: weighted_mean(ss, &p.range),
                total_cases: in_period.clone().filter_map(|r| r.new_cases).sum(),
                total_deaths: in_period.filter_map(|r| r.new_deaths).sum(),
                top_words: Vec::new(),
            }
        })
        .collect();

    Ok(AlignedReport {
        segmentation: seg.clone(),
        topic_labels: tf.labels().to_vec(),
        rolling_window,
        rows,
        periods,
        agency_top_words: BTreeMap::new(),
    })
}
