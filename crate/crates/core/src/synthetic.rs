//! Seeded generators for planted-structure corpora. The planted topic-word
//! matrices are the ground truth that recovery tests compare against.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use chrono::{Days, NaiveDate, TimeDelta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lda::draw;
use crate::preprocess::{BowCorpus, BowDocument, TokenId, Vocabulary};

/// `k` topics over `k * width` words; topic `t` owns words
/// `t*width .. (t+1)*width` with weights decreasing linearly, so the first
/// word of each block is its unique mode.
pub fn disjoint_topics(k: usize, width: usize) -> Vec<Vec<f64>> {
    let v = k * width;
    let norm = (width * (width + 1) / 2) as f64;
    (0..k)
        .map(|t| {
            let mut row = vec![0.0; v];
            for j in 0..width {
                row[t * width + j] = (width - j) as f64 / norm;
            }
            row
        })
        .collect()
}

/// Plain `w0 .. w{v-1}` vocabulary.
pub fn numbered_vocabulary(v: usize) -> Vocabulary {
    Vocabulary::from_ranked((0..v).map(|i| format!("w{i}")).collect(), vec![0; v])
        .expect("v >= 2")
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub bow: BowCorpus,
    /// Planted topic of each document.
    pub labels: Vec<usize>,
}

/// Single-topic documents: each picks a planted topic uniformly and draws
/// `doc_len` tokens from it. Documents are spread over consecutive days from
/// `start`, `docs_per_day` per day.
pub fn single_topic_corpus(
    phi: &[Vec<f64>],
    n_docs: usize,
    doc_len: usize,
    docs_per_day: usize,
    start: NaiveDate,
    seed: u64,
) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = phi[0].len();
    let mut docs = Vec::with_capacity(n_docs);
    let mut labels = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let topic = rng.gen_range(0..phi.len());
        let ids: Vec<TokenId> = (0..doc_len).map(|_| draw(&phi[topic], &mut rng) as TokenId).collect();
        docs.push(make_doc(d, start, d / docs_per_day.max(1), d % docs_per_day.max(1), ids));
        labels.push(topic);
    }
    PlantedCorpus {
        bow: BowCorpus::from_documents(numbered_vocabulary(v), docs).expect("generated corpus is valid"),
        labels,
    }
}

fn make_doc(d: usize, start: NaiveDate, day: usize, minute: usize, ids: Vec<TokenId>) -> BowDocument {
    let ts = (start + Days::new(day as u64)).and_hms_opt(0, 0, 0).expect("midnight").and_utc()
        + TimeDelta::minutes(minute as i64);
    BowDocument::from_token_ids(format!("doc{d}"), "SYN", ts, ids).expect("doc_len >= 1")
}

/// Planted drift: two disjoint blocks of `width` words plus one drifting word
/// (id `2 * width`). In slice `t` of `slices`, topic 0 puts mass
/// `lo + (hi - lo) * t / (slices - 1)` on the drifting word and spreads the rest
/// over its block; topic 1 is static.
#[derive(Debug, Clone)]
pub struct DriftCorpus {
    pub bow: BowCorpus,
    pub drift_word: TokenId,
    /// Planted phi per slice, `[t][k][w]`.
    pub phi: Vec<Vec<Vec<f64>>>,
}

pub fn drift_corpus(
    slices: usize,
    width: usize,
    docs_per_slice: usize,
    doc_len: usize,
    (lo, hi): (f64, f64),
    start: NaiveDate,
    seed: u64,
) -> DriftCorpus {
    let v = 2 * width + 1;
    let drift = 2 * width;
    let base = disjoint_topics(2, width);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    let mut phis = Vec::with_capacity(slices);
    for t in 0..slices {
        let frac = if slices > 1 { t as f64 / (slices - 1) as f64 } else { 0.0 };
        let mass = lo + (hi - lo) * frac;
        let mut topic0: Vec<f64> = base[0].iter().map(|&p| p * (1.0 - mass)).collect();
        topic0.push(mass);
        let mut topic1 = base[1].clone();
        topic1.push(0.0);
        let phi = vec![topic0, topic1];
        for i in 0..docs_per_slice {
            let topic = rng.gen_range(0..2);
            let ids: Vec<TokenId> = (0..doc_len).map(|_| draw(&phi[topic], &mut rng) as TokenId).collect();
            docs.push(make_doc(docs.len(), start, t, i, ids));
        }
        phis.push(phi);
    }
    DriftCorpus {
        bow: BowCorpus::from_documents(numbered_vocabulary(v), docs).expect("generated corpus is valid"),
        drift_word: drift as TokenId,
        phi: phis,
    }
}
