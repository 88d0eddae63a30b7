//! Lexicon sentiment: per-tweet token-mean valence, daily means, and trailing
//! rolling means. All arithmetic is exact (arbitrary-precision rationals);
//! floats appear only when a value is reported.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::calendar::DateRange;
use crate::corpus::Corpus;
use crate::preprocess::Tokenizer;

const BUNDLED_LEXICON: &str = include_str!("../data/lexicon.tsv");

/// Largest magnitude of a raw lexicon valence.
pub const VALENCE_SCALE: i64 = 5;

const NEGATORS: &[&str] = &[
    "not", "no", "never", "nor", "cannot", "cant", "dont", "doesnt", "didnt", "isnt", "arent", "wasnt", "werent",
    "wont", "without",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SentimentError {
    #[error("lexicon line {line}: expected `token<TAB>valence`")]
    Format { line: usize },
    #[error("lexicon line {line}: valence {value} outside [-5, 5]")]
    Range { line: usize, value: i64 },
    #[error("lexicon line {line}: duplicate token {token:?}")]
    Duplicate { line: usize, token: String },
    #[error("rolling window must be at least one day")]
    ZeroWindow,
}

/// Token valences in [-1, 1], stored as integer valences in [-5, 5].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SentimentLexicon(BTreeMap<String, i64>);

impl SentimentLexicon {
    /// Tab-separated `token<TAB>valence`; `#` comments and blank lines ignored.
    pub fn parse(text: &str) -> Result<Self, SentimentError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (token, value) = trimmed.split_once('\t').ok_or(SentimentError::Format { line })?;
            let value: i64 = value.trim().parse().map_err(|_| SentimentError::Format { line })?;
            let token = token.trim().to_lowercase();
            if token.is_empty() {
                return Err(SentimentError::Format { line });
            }
            if !(-VALENCE_SCALE..=VALENCE_SCALE).contains(&value) {
                return Err(SentimentError::Range { line, value });
            }
            if map.insert(token.clone(), value).is_some() {
                return Err(SentimentError::Duplicate { line, token });
            }
        }
        Ok(Self(map))
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON).expect("bundled lexicon is well-formed")
    }

    /// Normalised valence `raw / 5`.
    pub fn valence(&self, token: &str) -> Option<BigRational> {
        self.0
            .get(token)
            .map(|&v| BigRational::new(BigInt::from(v), BigInt::from(VALENCE_SCALE)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Scores a text as the mean valence of its lexicon-matched tokens.
#[derive(Debug, Clone)]
pub struct SentimentScorer {
    lexicon: SentimentLexicon,
    tokenizer: Tokenizer,
    negation: bool,
}

impl SentimentScorer {
    pub fn new(lexicon: SentimentLexicon, tokenizer: Tokenizer) -> Self {
        Self { lexicon, tokenizer, negation: false }
    }

    /// Flip the valence of a token directly preceded by a negator ("not safe").
    pub fn with_negation(mut self, on: bool) -> Self {
        self.negation = on;
        self
    }

    pub fn score(&self, text: &str) -> BigRational {
        let mut sum = BigRational::zero();
        let mut matched: i64 = 0;
        let mut prev: Option<String> = None;
        for word in self.tokenizer.words(text) {
            if self.tokenizer.keeps(&word) {
                if let Some(v) = self.lexicon.valence(&word) {
                    let negated = self.negation && prev.as_deref().is_some_and(|p| NEGATORS.contains(&p));
                    if negated {
                        sum -= v;
                    } else {
                        sum += v;
                    }
                    matched += 1;
                }
            }
            prev = Some(word);
        }
        if matched == 0 {
            sum
        } else {
            sum / BigRational::from_integer(BigInt::from(matched))
        }
    }
}

/// Token-mean valence with the default tokenizer and no negation handling.
pub fn score_text(text: &str, lexicon: &SentimentLexicon) -> BigRational {
    SentimentScorer::new(lexicon.clone(), Tokenizer::default()).score(text)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DaySentiment {
    /// `None` when no tweet contributes.
    pub mean: Option<BigRational>,
    pub count: usize,
}

impl DaySentiment {
    pub fn mean_f64(&self) -> Option<f64> {
        self.mean.as_ref().map(to_f64)
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("bounded rationals convert")
}

/// One entry per calendar day of a contiguous range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentimentSeries {
    range: DateRange,
    days: Vec<DaySentiment>,
}

impl SentimentSeries {
    pub fn new(range: DateRange, days: Vec<DaySentiment>) -> Self {
        assert_eq!(range.len(), days.len(), "one entry per day");
        Self { range, days }
    }

    /// Daily unweighted means of dated scores over the span of the dates.
    /// Returns `None` for an empty input.
    pub fn from_scores<I>(scores: I) -> Option<Self>
    where
        I: IntoIterator<Item = (NaiveDate, BigRational)>,
    {
        let mut by_day: BTreeMap<NaiveDate, (BigRational, usize)> = BTreeMap::new();
        for (date, s) in scores {
            let e = by_day.entry(date).or_insert_with(|| (BigRational::zero(), 0));
            e.0 += s;
            e.1 += 1;
        }
        let first = *by_day.first_key_value()?.0;
        let last = *by_day.last_key_value()?.0;
        let range = DateRange::new(first, last).expect("ordered keys");
        let days = range
            .days()
            .map(|d| match by_day.remove(&d) {
                Some((sum, n)) => DaySentiment {
                    mean: Some(sum / BigRational::from_integer(BigInt::from(n))),
                    count: n,
                },
                None => DaySentiment { mean: None, count: 0 },
            })
            .collect();
        Some(Self { range, days })
    }

    pub fn range(&self) -> DateRange {
        self.range
    }

    pub fn days(&self) -> &[DaySentiment] {
        &self.days
    }

    pub fn get(&self, date: NaiveDate) -> Option<&DaySentiment> {
        self.range.index_of(date).map(|i| &self.days[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, &DaySentiment)> + '_ {
        self.range.days().zip(self.days.iter())
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }
}

/// Per-day mean score of a corpus, empty days undefined.
pub fn daily_sentiment(corpus: &Corpus, scorer: &SentimentScorer) -> SentimentSeries {
    SentimentSeries::from_scores(corpus.records().iter().map(|r| (r.date(), scorer.score(&r.text))))
        .expect("corpus is non-empty")
}

/// Trailing inclusive window of `window_days` days, averaging only the
/// defined days inside it. `count` becomes the tweets within the window.
pub fn rolling_mean(series: &SentimentSeries, window_days: usize) -> Result<SentimentSeries, SentimentError> {
    if window_days == 0 {
        return Err(SentimentError::ZeroWindow);
    }
    let days = &series.days;
    let mut out = Vec::with_capacity(days.len());
    let mut sum = BigRational::zero();
    let mut defined = 0i64;
    let mut tweets = 0usize;
    for i in 0..days.len() {
        if let Some(m) = &days[i].mean {
            sum += m;
            defined += 1;
        }
        tweets += days[i].count;
        if i >= window_days {
            let gone = &days[i - window_days];
            if let Some(m) = &gone.mean {
                sum -= m;
                defined -= 1;
            }
            tweets -= gone.count;
        }
        out.push(DaySentiment {
            mean: (defined > 0).then(|| &sum / BigRational::from_integer(BigInt::from(defined))),
            count: tweets,
        });
    }
    Ok(SentimentSeries { range: series.range, days: out })
}

/// Tweet-weighted mean over the days of `series` falling in `range`.
pub fn weighted_mean(series: &SentimentSeries, range: &DateRange) -> Option<BigRational> {
    let mut sum = BigRational::zero();
    let mut n = 0usize;
    for (_, day) in series.iter().filter(|(d, _)| range.contains(*d)) {
        if let Some(m) = &day.mean {
            sum += m * BigRational::from_integer(BigInt::from(day.count));
            n += day.count;
        }
    }
    (n > 0).then(|| sum / BigRational::from_integer(BigInt::from(n)))
}

impl core::fmt::Display for SentimentLexicon {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        for (t, v) in &self.0 {
            writeln!(f, "{t}\t{v}")?;
        }
        Ok(())
    }
}

impl From<SentimentLexicon> for BTreeMap<String, i64> {
    fn from(l: SentimentLexicon) -> Self {
        l.0
    }
}

impl FromIterator<(String, i64)> for SentimentLexicon {
    /// Values are clamped to [-5, 5].
    fn from_iter<I: IntoIterator<Item = (String, i64)>>(iter: I) -> Self {
        Self(
            iter.into_iter()
                .map(|(t, v)| (t.to_lowercase(), v.clamp(-VALENCE_SCALE, VALENCE_SCALE)))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::ymd;
    use crate::preprocess::Stoplist;
    use alloc::string::ToString;
    use alloc::vec;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn lex() -> SentimentLexicon {
        [("good".to_string(), 5), ("bad".to_string(), -5)].into_iter().collect()
    }

    #[test]
    fn score_examples() {
        assert_eq!(score_text("", &lex()), q(0, 1));
        assert_eq!(score_text("good good bad", &lex()), q(1, 3));
        assert_eq!(score_text("nothing to see here", &lex()), q(0, 1));
    }

    #[test]
    fn negation_flag() {
        let s = SentimentScorer::new(lex(), Tokenizer::new(Stoplist::bundled()));
        assert_eq!(s.score("not good"), q(1, 1));
        let s = s.with_negation(true);
        assert_eq!(s.score("not good"), q(-1, 1));
        assert_eq!(s.score("not really good"), q(1, 1));
    }

    #[test]
    fn lexicon_parsing() {
        let l = SentimentLexicon::parse("# c\nGood\t3\nbad\t-5\n\n").unwrap();
        assert_eq!(l.valence("good"), Some(q(3, 5)));
        assert_eq!(l.len(), 2);
        assert_eq!(SentimentLexicon::parse("x 3").unwrap_err(), SentimentError::Format { line: 1 });
        assert_eq!(SentimentLexicon::parse("x\t6").unwrap_err(), SentimentError::Range { line: 1, value: 6 });
        assert!(matches!(SentimentLexicon::parse("x\t1\nx\t2"), Err(SentimentError::Duplicate { line: 2, .. })));
        let b = SentimentLexicon::bundled();
        assert!(b.len() > 100);
        assert_eq!(b.valence("panic"), Some(q(-3, 5)));
    }

    fn series(vals: &[Option<i64>]) -> SentimentSeries {
        let range = DateRange::new(ymd(2020, 3, 1), ymd(2020, 3, vals.len() as u32)).unwrap();
        SentimentSeries::new(
            range,
            vals.iter()
                .map(|v| DaySentiment { mean: v.map(|x| q(x, 1)), count: v.map_or(0, |_| 1) })
                .collect(),
        )
    }

    fn means(s: &SentimentSeries) -> Vec<Option<BigRational>> {
        s.days().iter().map(|d| d.mean.clone()).collect()
    }

    #[test]
    fn rolling_examples() {
        let s = series(&[Some(1), Some(2), Some(3)]);
        assert_eq!(means(&rolling_mean(&s, 1).unwrap()), means(&s));
        assert_eq!(means(&rolling_mean(&s, 2).unwrap()), [Some(q(1, 1)), Some(q(3, 2)), Some(q(5, 2))]);
        let gap = series(&[Some(1), None, Some(3)]);
        assert_eq!(means(&rolling_mean(&gap, 2).unwrap()), [Some(q(1, 1)), Some(q(1, 1)), Some(q(3, 1))]);
        let empty = series(&[Some(1), None, None]);
        assert_eq!(means(&rolling_mean(&empty, 2).unwrap())[2], None);
        assert_eq!(rolling_mean(&s, 0).unwrap_err(), SentimentError::ZeroWindow);
    }

    #[test]
    fn daily_examples() {
        let d1 = ymd(2020, 3, 1);
        let d3 = ymd(2020, 3, 3);
        let s = SentimentSeries::from_scores(vec![(d1, q(1, 2))]).unwrap();
        assert_eq!(s.days()[0], DaySentiment { mean: Some(q(1, 2)), count: 1 });
        let s = SentimentSeries::from_scores(vec![(d1, q(1, 1)), (d1, q(-1, 1))]).unwrap();
        assert_eq!(s.days()[0], DaySentiment { mean: Some(q(0, 1)), count: 2 });
        let s = SentimentSeries::from_scores(vec![(d3, q(-1, 1)), (d1, q(1, 1))]).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.days()[1], DaySentiment { mean: None, count: 0 });
        assert_eq!(s.get(d3).unwrap().mean_f64(), Some(-1.0));
        assert!(SentimentSeries::from_scores(vec![]).is_none());
    }

    #[test]
    fn weighted_period_mean() {
        let d1 = ymd(2020, 3, 1);
        let d2 = ymd(2020, 3, 2);
        let s = SentimentSeries::from_scores(vec![(d1, q(1, 1)), (d1, q(1, 1)), (d2, q(-1, 1))]).unwrap();
        assert_eq!(weighted_mean(&s, &s.range()), Some(q(1, 3)));
        let none = DateRange::new(ymd(2020, 4, 1), ymd(2020, 4, 2)).unwrap();
        assert_eq!(weighted_mean(&s, &none), None);
    }
}
