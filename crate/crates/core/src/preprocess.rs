//! Tokenization, vocabulary pruning and sparse bag-of-words documents.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use chrono::{DateTime, NaiveDate, Utc};
use thiserror::Error;

use crate::calendar;
use crate::corpus::{slice_by_day, Corpus};

pub type TokenId = u32;

const BUNDLED_STOPLIST: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreprocessError {
    #[error("min_df must be at least 1")]
    ZeroMinDf,
    #[error("vocabulary has {0} token(s) after pruning; at least 2 are required")]
    VocabularyTooSmall(usize),
    #[error("duplicate vocabulary token {0:?}")]
    DuplicateToken(String),
    #[error("documents are not in timestamp order")]
    Unsorted,
    #[error("document {0} has no in-vocabulary tokens")]
    EmptyDocument(usize),
    #[error("token id {0} is outside the vocabulary")]
    UnknownToken(TokenId),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stoplist(BTreeSet<String>);

impl Stoplist {
    /// One token per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    /// English function words plus tweet boilerplate ("amp", "http", ...).
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_STOPLIST)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stoplist {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

/// Tweet tokenizer: lowercases, removes URLs and @-mentions, keeps hashtag
/// bodies, drops tokens shorter than three characters and stoplist tokens.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    stoplist: Stoplist,
    min_chars: usize,
    strip_suffixes: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self::new(Stoplist::bundled())
    }
}

impl Tokenizer {
    pub fn new(stoplist: Stoplist) -> Self {
        Self { stoplist, min_chars: 3, strip_suffixes: false }
    }

    /// Crude plural stripping ("cases" -> "case", "supplies" -> "supply").
    pub fn with_suffix_stripping(mut self, on: bool) -> Self {
        self.strip_suffixes = on;
        self
    }

    pub fn stoplist(&self) -> &Stoplist {
        &self.stoplist
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        self.words(text).into_iter().filter(|w| self.keeps(w)).collect()
    }

    /// Lowercased words with URLs and mentions removed, before the length and
    /// stoplist filters. Sentiment negation looks at this stream.
    pub fn words(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for chunk in text.split_whitespace() {
            let lower = chunk.to_lowercase();
            let chunk = lower.trim_start_matches(|c: char| !c.is_alphanumeric() && c != '#' && c != '@');
            if chunk.starts_with('@')
                || chunk.starts_with("http://")
                || chunk.starts_with("https://")
                || chunk.starts_with("www.")
            {
                continue;
            }
            let body: String = chunk
                .trim_start_matches('#')
                .chars()
                .filter(|&c| c != '\'' && c != '\u{2019}')
                .collect();
            for part in body.split(|c: char| !c.is_alphanumeric()).filter(|p| !p.is_empty()) {
                out.push(if self.strip_suffixes { strip_suffix(part) } else { part.to_string() });
            }
        }
        out
    }

    pub fn keeps(&self, word: &str) -> bool {
        word.chars().count() >= self.min_chars && !self.stoplist.contains(word)
    }
}

fn strip_suffix(word: &str) -> String {
    let n = word.chars().count();
    if n > 4 && word.ends_with("ies") {
        let mut s = word[..word.len() - 3].to_string();
        s.push('y');
        s
    } else if n > 3 && word.ends_with('s') && !["ss", "us", "is"].iter().any(|e| word.ends_with(e)) {
        word[..word.len() - 1].to_string()
    } else {
        word.to_string()
    }
}

/// Default pruning threshold: 5, or 2 for corpora under 1,000 documents.
pub fn default_min_df(n_docs: usize) -> usize {
    if n_docs < 1000 {
        2
    } else {
        5
    }
}

/// Dense token ids ordered by descending document frequency, ties
/// lexicographic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    doc_freq: Vec<u32>,
    index: BTreeMap<String, TokenId>,
}

impl Vocabulary {
    /// Takes tokens already in id order. Used for synthetic corpora and for
    /// reloading a persisted vocabulary.
    pub fn from_ranked(tokens: Vec<String>, doc_freq: Vec<u32>) -> Result<Self, PreprocessError> {
        assert_eq!(tokens.len(), doc_freq.len(), "one frequency per token");
        if tokens.len() < 2 {
            return Err(PreprocessError::VocabularyTooSmall(tokens.len()));
        }
        let mut index = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as TokenId).is_some() {
                return Err(PreprocessError::DuplicateToken(t.clone()));
            }
        }
        Ok(Self { tokens, doc_freq, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn doc_freq(&self, id: TokenId) -> u32 {
        self.doc_freq[id as usize]
    }

    pub fn doc_freqs(&self) -> &[u32] {
        &self.doc_freq
    }

    pub fn words(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter().map(|&i| self.token(i).to_string()).collect()
    }
}

/// Keeps tokens occurring in at least `min_df` documents and not in the
/// stoplist.
pub fn build_vocabulary<D, T>(docs: &[D], min_df: usize, stoplist: &Stoplist) -> Result<Vocabulary, PreprocessError>
where
    D: AsRef<[T]>,
    T: AsRef<str>,
{
    if min_df == 0 {
        return Err(PreprocessError::ZeroMinDf);
    }
    let mut df: BTreeMap<&str, u32> = BTreeMap::new();
    for doc in docs {
        let distinct: BTreeSet<&str> = doc.as_ref().iter().map(AsRef::as_ref).collect();
        for t in distinct {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, u32)> = df
        .into_iter()
        .filter(|&(t, n)| n as usize >= min_df && !stoplist.contains(t))
        .collect();
    // BTreeMap order already gives the lexicographic tie-break.
    kept.sort_by(|a, b| b.1.cmp(&a.1));
    let (tokens, doc_freq) = kept.into_iter().map(|(t, n)| (t.to_string(), n)).unzip();
    Vocabulary::from_ranked(tokens, doc_freq)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BowDocument {
    pub source_id: String,
    pub agency: String,
    pub timestamp: DateTime<Utc>,
    /// Sorted by token id, counts >= 1.
    pub counts: Vec<(TokenId, u32)>,
}

impl BowDocument {
    /// Counts an id sequence. Returns `None` when `ids` is empty.
    pub fn from_token_ids(
        source_id: impl Into<String>,
        agency: impl Into<String>,
        timestamp: DateTime<Utc>,
        ids: impl IntoIterator<Item = TokenId>,
    ) -> Option<Self> {
        let mut counts: BTreeMap<TokenId, u32> = BTreeMap::new();
        for id in ids {
            *counts.entry(id).or_default() += 1;
        }
        (!counts.is_empty()).then(|| Self {
            source_id: source_id.into(),
            agency: agency.into(),
            timestamp,
            counts: counts.into_iter().collect(),
        })
    }

    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().map(|&(_, c)| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Token ids with multiplicity, in id order.
    pub fn tokens(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.counts
            .iter()
            .flat_map(|&(id, c)| core::iter::repeat(id).take(c as usize))
    }

    pub fn contains(&self, id: TokenId) -> bool {
        self.counts.binary_search_by_key(&id, |&(t, _)| t).is_ok()
    }
}

/// Documents of one calendar day.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BowSlice {
    pub date: NaiveDate,
    pub docs: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BowCorpus {
    vocab: Vocabulary,
    docs: Vec<BowDocument>,
    slices: Vec<BowSlice>,
    dropped: usize,
}

impl BowCorpus {
    /// Builds day slices from timestamp-ordered documents.
    pub fn from_documents(vocab: Vocabulary, docs: Vec<BowDocument>) -> Result<Self, PreprocessError> {
        if docs.windows(2).any(|w| w[0].timestamp > w[1].timestamp) {
            return Err(PreprocessError::Unsorted);
        }
        for (i, d) in docs.iter().enumerate() {
            if d.is_empty() {
                return Err(PreprocessError::EmptyDocument(i));
            }
            if let Some(&(id, _)) = d.counts.iter().find(|&&(id, _)| id as usize >= vocab.len()) {
                return Err(PreprocessError::UnknownToken(id));
            }
        }
        let slices = calendar::bucket_by_day(docs.iter().map(BowDocument::date))
            .into_iter()
            .map(|(date, idx)| {
                let start = idx.first().copied();
                let range = match start {
                    Some(s) => s..s + idx.len(),
                    None => 0..0,
                };
                (date, range)
            })
            .collect::<Vec<_>>();
        let slices = fix_empty_ranges(slices);
        Ok(Self { vocab, docs, slices, dropped: 0 })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn docs(&self) -> &[BowDocument] {
        &self.docs
    }

    pub fn slices(&self) -> &[BowSlice] {
        &self.slices
    }

    pub fn slice_docs(&self, slice: &BowSlice) -> &[BowDocument] {
        &self.docs[slice.docs.clone()]
    }

    /// Records dropped because none of their tokens were in the vocabulary.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(BowDocument::len).sum()
    }

    /// Slice index holding document `doc`.
    pub fn slice_of(&self, doc: usize) -> usize {
        self.slices
            .partition_point(|s| s.docs.end <= doc)
    }
}

/// Empty slices get the position of the next non-empty one, so ranges stay
/// monotone.
fn fix_empty_ranges(slices: Vec<(NaiveDate, Range<usize>)>) -> Vec<BowSlice> {
    let mut out: Vec<BowSlice> = Vec::with_capacity(slices.len());
    let mut cursor = 0;
    for (date, r) in slices {
        let docs = if r.is_empty() { cursor..cursor } else { r };
        cursor = docs.end;
        out.push(BowSlice { date, docs });
    }
    out
}

/// One document per record; records with no in-vocabulary token are dropped
/// and counted. Slices follow `slice_by_day` of the corpus.
pub fn to_bow(corpus: &Corpus, vocab: &Vocabulary, tokenizer: &Tokenizer) -> BowCorpus {
    let mut docs = Vec::with_capacity(corpus.len());
    let mut slices = Vec::new();
    let mut dropped = 0;
    for day in slice_by_day(corpus) {
        let start = docs.len();
        for &ri in &day.records {
            let rec = &corpus.records()[ri];
            let ids = tokenizer.tokenize(&rec.text).into_iter().filter_map(|t| vocab.id(&t));
            match BowDocument::from_token_ids(rec.id.clone(), rec.agency.clone(), rec.timestamp, ids) {
                Some(doc) => docs.push(doc),
                None => dropped += 1,
            }
        }
        slices.push(BowSlice { date: day.date, docs: start..docs.len() });
    }
    BowCorpus { vocab: vocab.clone(), docs, slices, dropped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest_tweets, IngestOptions, RawTweet};
    use alloc::vec;

    fn tok() -> Tokenizer {
        Tokenizer::default()
    }

    #[test]
    fn tokenize_examples() {
        assert!(tok().tokenize("").is_empty());
        assert_eq!(
            tok().tokenize("Wear masks! https://t.co/x @WHO #COVID19"),
            ["wear", "masks", "covid19"]
        );
        assert_eq!(
            tok().tokenize("Social distancing, social distancing."),
            ["social", "distancing", "social", "distancing"]
        );
    }

    #[test]
    fn tokenize_drops_short_and_stop_tokens() {
        assert_eq!(tok().tokenize("It is the flu & amp; we go"), ["flu"]);
        assert_eq!(tok().tokenize("(@CDCgov) don't panic"), ["panic"]);
    }

    #[test]
    fn suffix_stripping() {
        let t = tok().with_suffix_stripping(true);
        assert_eq!(t.tokenize("cases supplies virus masks"), ["case", "supply", "virus", "mask"]);
    }

    #[test]
    fn vocabulary_too_small() {
        let docs = vec![vec!["a-token"], vec!["a-token"], vec!["b-token"]];
        assert_eq!(
            build_vocabulary(&docs, 2, &Stoplist::default()).unwrap_err(),
            PreprocessError::VocabularyTooSmall(1)
        );
    }

    #[test]
    fn vocabulary_ids_by_document_frequency() {
        let docs = vec![vec!["masks", "home"], vec!["masks"], vec!["home", "masks"]];
        let v = build_vocabulary(&docs, 2, &Stoplist::default()).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.id("masks"), Some(0));
        assert_eq!(v.id("home"), Some(1));
        assert_eq!(v.doc_freqs(), [3, 2]);
    }

    #[test]
    fn vocabulary_ties_are_lexicographic() {
        let docs = vec![vec!["zeta", "alpha", "mid"], vec!["mid"]];
        let v = build_vocabulary(&docs, 1, &Stoplist::default()).unwrap();
        assert_eq!(v.tokens(), ["mid", "alpha", "zeta"]);
        assert_eq!(build_vocabulary(&docs, 0, &Stoplist::default()).unwrap_err(), PreprocessError::ZeroMinDf);
    }

    fn corpus(texts: &[(&str, &str)]) -> Corpus {
        let lines = texts.iter().enumerate().map(|(i, (at, text))| {
            (
                i + 1,
                Ok(RawTweet {
                    id: alloc::format!("t{i}"),
                    created_at: (*at).into(),
                    agency: "CDC".into(),
                    text: (*text).into(),
                }),
            )
        });
        ingest_tweets(lines, &IngestOptions::default()).unwrap().0
    }

    #[test]
    fn bow_counts_and_drops() {
        let docs = vec![vec!["masks", "home"], vec!["masks"], vec!["home", "masks"]];
        let v = build_vocabulary(&docs, 2, &Stoplist::default()).unwrap();
        let c = corpus(&[
            ("2020-03-01T00:00:00Z", "masks masks home"),
            ("2020-03-01T01:00:00Z", "nothing relevant"),
            ("2020-03-03T00:00:00Z", "home"),
        ]);
        let bow = to_bow(&c, &v, &tok());
        assert_eq!(bow.len(), 2);
        assert_eq!(bow.dropped(), 1);
        assert_eq!(bow.docs()[0].counts, [(0, 2), (1, 1)]);
        assert_eq!(bow.slices().len(), 3);
        assert_eq!(bow.slices()[0].docs, 0..1);
        assert_eq!(bow.slices()[1].docs, 1..1);
        assert_eq!(bow.slices()[2].docs, 1..2);
        assert_eq!(bow.slice_of(0), 0);
        assert_eq!(bow.slice_of(1), 2);
    }

    #[test]
    fn from_documents_rejects_bad_input() {
        let v = Vocabulary::from_ranked(vec!["a".into(), "b".into()], vec![1, 1]).unwrap();
        let t0 = calendar::parse_timestamp("2020-03-02T00:00:00Z").unwrap();
        let t1 = calendar::parse_timestamp("2020-03-01T00:00:00Z").unwrap();
        let d0 = BowDocument::from_token_ids("x", "A", t0, [0]).unwrap();
        let d1 = BowDocument::from_token_ids("y", "A", t1, [1]).unwrap();
        assert_eq!(
            BowCorpus::from_documents(v.clone(), vec![d0.clone(), d1.clone()]).unwrap_err(),
            PreprocessError::Unsorted
        );
        let bad = BowDocument::from_token_ids("z", "A", t0, [7]).unwrap();
        assert_eq!(
            BowCorpus::from_documents(v.clone(), vec![bad]).unwrap_err(),
            PreprocessError::UnknownToken(7)
        );
        let ok = BowCorpus::from_documents(v, vec![d1, d0]).unwrap();
        assert_eq!(ok.slices().len(), 2);
    }
}
