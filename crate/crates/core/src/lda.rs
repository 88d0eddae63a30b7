//! Static LDA fitted by collapsed Gibbs sampling, with NPMI coherence and
//! coherence-driven selection of the topic count.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::{BowCorpus, BowDocument, TokenId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LdaError {
    #[error("topic count must be at least 1")]
    NoTopics,
    #[error("{k} topics exceed the {tokens} tokens in the corpus")]
    TooManyTopics { k: usize, tokens: usize },
    #[error("hyperparameters must be finite and positive (alpha={alpha}, eta={eta})")]
    BadHyperparameters { alpha: f64, eta: f64 },
    #[error("iterations ({iterations}) must exceed burn-in ({burn_in})")]
    BadSchedule { iterations: usize, burn_in: usize },
    #[error("corpus has no documents")]
    EmptyCorpus,
    #[error("candidate grid is empty or contains K < 2")]
    BadGrid,
    #[error("warm-start matrix is {rows}x{cols}, expected {k}x{v}")]
    WarmStartShape { rows: usize, cols: usize, k: usize, v: usize },
}

/// Fully resolved sampler configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub eta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

/// Sampler settings with the topic count left open. `alpha: None` resolves to
/// `50 / K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaSettings {
    pub alpha: Option<f64>,
    pub eta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for LdaSettings {
    fn default() -> Self {
        Self { alpha: None, eta: 0.01, iterations: 1000, burn_in: 500, seed: 0 }
    }
}

impl LdaSettings {
    pub fn for_k(&self, k: usize) -> LdaConfig {
        LdaConfig {
            k,
            alpha: self.alpha.unwrap_or(50.0 / k.max(1) as f64),
            eta: self.eta,
            iterations: self.iterations,
            burn_in: self.burn_in,
            seed: self.seed,
        }
    }
}

impl LdaConfig {
    pub fn validate_sampler(&self) -> Result<(), LdaError> {
        if self.k == 0 {
            return Err(LdaError::NoTopics);
        }
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.alpha) || !ok(self.eta) {
            return Err(LdaError::BadHyperparameters { alpha: self.alpha, eta: self.eta });
        }
        if self.iterations <= self.burn_in {
            return Err(LdaError::BadSchedule { iterations: self.iterations, burn_in: self.burn_in });
        }
        Ok(())
    }

    pub fn validate(&self, total_tokens: usize) -> Result<(), LdaError> {
        self.validate_sampler()?;
        if total_tokens == 0 {
            return Err(LdaError::EmptyCorpus);
        }
        if self.k > total_tokens {
            return Err(LdaError::TooManyTopics { k: self.k, tokens: total_tokens });
        }
        Ok(())
    }
}

/// Fitted static topic model. `phi` is K x V, `theta` is D x K; both are
/// posterior means averaged over the post-burn-in sweeps. `z` holds the final
/// assignment of every token, in `BowDocument::tokens` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub config: LdaConfig,
    pub phi: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub z: Vec<Vec<u32>>,
}

impl LdaModel {
    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn vocab_size(&self) -> usize {
        self.phi.first().map_or(0, Vec::len)
    }

    pub fn num_docs(&self) -> usize {
        self.theta.len()
    }

    /// Tokens assigned to each topic by the final sweep.
    pub fn topic_token_counts(&self) -> Vec<usize> {
        let mut n = vec![0; self.k()];
        for &t in self.z.iter().flatten() {
            n[t as usize] += 1;
        }
        n
    }
}

/// Read-only view of the sampler counts, handed to an observer after the
/// random initialisation (iteration 0) and after every sweep.
pub struct GibbsCounts<'a> {
    pub iteration: usize,
    pub vocab_size: usize,
    pub tokens: &'a [Vec<TokenId>],
    pub z: &'a [Vec<u32>],
    pub doc_topic: &'a [Vec<u32>],
    /// Row-major K x V.
    pub topic_word: &'a [u32],
    pub topic_totals: &'a [u32],
}

/// How the first assignment of each token is drawn.
#[derive(Debug, Clone, Copy)]
pub enum Init<'a> {
    Uniform,
    /// Draw each token's topic proportionally to `phi[k][w]` of an earlier fit.
    WarmStart(&'a [Vec<f64>]),
}

struct Sampler {
    k: usize,
    v: usize,
    tokens: Vec<Vec<TokenId>>,
    z: Vec<Vec<u32>>,
    n_dk: Vec<Vec<u32>>,
    n_kw: Vec<u32>,
    n_k: Vec<u32>,
}

impl Sampler {
    fn new(docs: &[BowDocument], v: usize, k: usize) -> Self {
        let tokens: Vec<Vec<TokenId>> = docs.iter().map(|d| d.tokens().collect()).collect();
        let z = tokens.iter().map(|t| vec![0; t.len()]).collect();
        Self {
            k,
            v,
            z,
            n_dk: vec![vec![0; k]; tokens.len()],
            n_kw: vec![0; k * v],
            n_k: vec![0; k],
            tokens,
        }
    }

    fn assign(&mut self, d: usize, i: usize, topic: usize) {
        let w = self.tokens[d][i] as usize;
        self.z[d][i] = topic as u32;
        self.n_dk[d][topic] += 1;
        self.n_kw[topic * self.v + w] += 1;
        self.n_k[topic] += 1;
    }

    fn unassign(&mut self, d: usize, i: usize) -> usize {
        let w = self.tokens[d][i] as usize;
        let topic = self.z[d][i] as usize;
        self.n_dk[d][topic] -= 1;
        self.n_kw[topic * self.v + w] -= 1;
        self.n_k[topic] -= 1;
        topic
    }

    fn initialise(&mut self, init: Init<'_>, rng: &mut ChaCha8Rng) {
        let mut weights = vec![0.0; self.k];
        for d in 0..self.tokens.len() {
            for i in 0..self.tokens[d].len() {
                let topic = match init {
                    Init::Uniform => rng.gen_range(0..self.k),
                    Init::WarmStart(phi) => {
                        let w = self.tokens[d][i] as usize;
                        for (slot, row) in weights.iter_mut().zip(phi) {
                            *slot = row[w];
                        }
                        draw(&weights, rng)
                    }
                };
                self.assign(d, i, topic);
            }
        }
    }

    fn sweep(&mut self, alpha: f64, eta: f64, weights: &mut [f64], rng: &mut ChaCha8Rng) {
        let v_eta = self.v as f64 * eta;
        for d in 0..self.tokens.len() {
            for i in 0..self.tokens[d].len() {
                self.unassign(d, i);
                let w = self.tokens[d][i] as usize;
                for (k, slot) in weights.iter_mut().enumerate() {
                    let doc = self.n_dk[d][k] as f64 + alpha;
                    let word = self.n_kw[k * self.v + w] as f64 + eta;
                    *slot = doc * word / (self.n_k[k] as f64 + v_eta);
                }
                let topic = draw(weights, rng);
                self.assign(d, i, topic);
            }
        }
    }

    fn counts(&self, iteration: usize) -> GibbsCounts<'_> {
        GibbsCounts {
            iteration,
            vocab_size: self.v,
            tokens: &self.tokens,
            z: &self.z,
            doc_topic: &self.n_dk,
            topic_word: &self.n_kw,
            topic_totals: &self.n_k,
        }
    }
}

/// Index drawn proportionally to non-negative `weights`.
pub(crate) fn draw(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return rng.gen_range(0..weights.len());
    }
    let mut u = rng.gen::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        if u < w {
            return k;
        }
        u -= w;
    }
    // Rounding can leave u marginally above the last weight.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Fits a corpus. Fails when K exceeds the number of tokens.
pub fn fit_lda(bow: &BowCorpus, config: &LdaConfig) -> Result<LdaModel, LdaError> {
    config.validate(bow.total_tokens())?;
    fit_documents(bow.docs(), bow.vocab().len(), config, Init::Uniform, |_| {})
}

/// Collapsed Gibbs over an arbitrary document list. The observer sees the
/// counts after initialisation and after every sweep.
///
/// Unlike [`fit_lda`] this accepts more topics than tokens; the surplus
/// topics simply stay empty.
pub fn fit_documents<F>(
    docs: &[BowDocument],
    vocab_size: usize,
    config: &LdaConfig,
    init: Init<'_>,
    mut observer: F,
) -> Result<LdaModel, LdaError>
where
    F: FnMut(&GibbsCounts<'_>),
{
    if docs.iter().all(BowDocument::is_empty) {
        return Err(LdaError::EmptyCorpus);
    }
    config.validate_sampler()?;
    if let Init::WarmStart(phi) = init {
        let cols = phi.first().map_or(0, Vec::len);
        if phi.len() != config.k || cols != vocab_size {
            return Err(LdaError::WarmStartShape { rows: phi.len(), cols, k: config.k, v: vocab_size });
        }
    }

    let k = config.k;
    let v = vocab_size;
    let (alpha, eta) = (config.alpha, config.eta);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut s = Sampler::new(docs, v, k);
    s.initialise(init, &mut rng);
    observer(&s.counts(0));

    let mut phi_acc = vec![vec![0.0; v]; k];
    let mut theta_acc = vec![vec![0.0; k]; docs.len()];
    let mut weights = vec![0.0; k];
    let v_eta = v as f64 * eta;
    let k_alpha = k as f64 * alpha;
    for it in 1..=config.iterations {
        s.sweep(alpha, eta, &mut weights, &mut rng);
        observer(&s.counts(it));
        if it <= config.burn_in {
            continue;
        }
        for (t, row) in phi_acc.iter_mut().enumerate() {
            let denom = s.n_k[t] as f64 + v_eta;
            for (w, acc) in row.iter_mut().enumerate() {
                *acc += (s.n_kw[t * v + w] as f64 + eta) / denom;
            }
        }
        for (d, row) in theta_acc.iter_mut().enumerate() {
            let denom = s.tokens[d].len() as f64 + k_alpha;
            for (t, acc) in row.iter_mut().enumerate() {
                *acc += (s.n_dk[d][t] as f64 + alpha) / denom;
            }
        }
    }
    let samples = (config.iterations - config.burn_in) as f64;
    let phi = phi_acc.into_iter().map(|r| normalise(r, samples)).collect();
    let theta = theta_acc.into_iter().map(|r| normalise(r, samples)).collect();
    Ok(LdaModel { config: *config, phi, theta, z: s.z })
}

/// Divides an accumulated row by the sample count and renormalises so the row
/// sums to one to within rounding.
fn normalise(mut row: Vec<f64>, samples: f64) -> Vec<f64> {
    for x in row.iter_mut() {
        *x /= samples;
    }
    let sum: f64 = row.iter().sum();
    for x in row.iter_mut() {
        *x /= sum;
    }
    row
}

/// Position of the largest value; the first one wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in values.iter().enumerate().skip(1) {
        if x > values[best] {
            best = i;
        }
    }
    best
}

/// The `n` highest-weight ids of `row`, ties broken by smaller id.
pub(crate) fn top_ids(row: &[f64], n: usize) -> Vec<TokenId> {
    let mut ids: Vec<TokenId> = (0..row.len() as TokenId).collect();
    ids.sort_by(|&a, &b| row[b as usize].total_cmp(&row[a as usize]).then(a.cmp(&b)));
    ids.truncate(n);
    ids
}

pub fn topic_top_words(model: &LdaModel, k: usize, n: usize) -> Vec<TokenId> {
    top_ids(&model.phi[k], n)
}

/// Hard topic of document `doc`: argmax of its theta row, ties to the smaller id.
pub fn dominant_topic(model: &LdaModel, doc: usize) -> usize {
    argmax(&model.theta[doc])
}

/// What counts as one co-occurrence context.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoherenceScope {
    /// Each document is a context.
    #[default]
    Document,
    /// All documents of one calendar day form a single context.
    Day,
}

/// Number of top words per topic scored by `coherence`.
pub const COHERENCE_TOP_N: usize = 10;

/// NPMI of a word pair from context counts, with one pseudo-context added to
/// every count: `p = (n + 1) / (contexts + 2)`.
pub fn npmi(n_i: usize, n_j: usize, n_ij: usize, contexts: usize) -> f64 {
    let denom = contexts as f64 + 2.0;
    let p_i = (n_i as f64 + 1.0) / denom;
    let p_j = (n_j as f64 + 1.0) / denom;
    let p_ij = (n_ij as f64 + 1.0) / denom;
    libm::log(p_ij / (p_i * p_j)) / -libm::log(p_ij)
}

/// Mean NPMI over all pairs of each topic's top-10 words.
pub fn coherence(model: &LdaModel, bow: &BowCorpus, scope: CoherenceScope) -> Vec<f64> {
    let contexts: Vec<Vec<TokenId>> = match scope {
        CoherenceScope::Document => bow
            .docs()
            .iter()
            .map(|d| d.counts.iter().map(|&(w, _)| w).collect())
            .collect(),
        CoherenceScope::Day => bow
            .slices()
            .iter()
            .filter(|s| !s.docs.is_empty())
            .map(|s| {
                let mut ws: Vec<TokenId> =
                    bow.slice_docs(s).iter().flat_map(|d| d.counts.iter().map(|&(w, _)| w)).collect();
                ws.sort_unstable();
                ws.dedup();
                ws
            })
            .collect(),
    };
    let n = COHERENCE_TOP_N.min(model.vocab_size());
    (0..model.k())
        .map(|k| {
            let top = topic_top_words(model, k, n);
            let has = |ctx: &Vec<TokenId>, w: TokenId| ctx.binary_search(&w).is_ok();
            let single: Vec<usize> = top.iter().map(|&w| contexts.iter().filter(|c| has(c, w)).count()).collect();
            let mut sum = 0.0;
            let mut pairs = 0usize;
            for a in 0..top.len() {
                for b in a + 1..top.len() {
                    let joint = contexts.iter().filter(|c| has(c, top[a]) && has(c, top[b])).count();
                    sum += npmi(single[a], single[b], joint, contexts.len());
                    pairs += 1;
                }
            }
            if pairs == 0 {
                0.0
            } else {
                sum / pairs as f64
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    /// (K, mean coherence) in ascending K.
    pub candidates: Vec<(usize, f64)>,
    pub selected: usize,
}

impl CoherenceReport {
    /// Picks the highest mean coherence; equal scores go to the smaller K.
    pub fn from_scores(mut candidates: Vec<(usize, f64)>) -> Option<Self> {
        candidates.sort_by_key(|&(k, _)| k);
        let mut best: Option<(usize, f64)> = None;
        for &(k, c) in &candidates {
            if best.map_or(true, |(_, b)| c > b) {
                best = Some((k, c));
            }
        }
        best.map(|(selected, _)| Self { candidates, selected })
    }
}

pub struct KSelection {
    pub report: CoherenceReport,
    pub model: LdaModel,
}

/// Fits one model per candidate K with the same seed and keeps the most
/// coherent one. A single-value grid skips the coherence pass.
pub fn select_k(bow: &BowCorpus, k_grid: &[usize], settings: &LdaSettings, scope: CoherenceScope) -> Result<KSelection, LdaError> {
    let mut grid = k_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if grid.is_empty() || grid[0] < 2 {
        return Err(LdaError::BadGrid);
    }
    if let [k] = grid[..] {
        let model = fit_lda(bow, &settings.for_k(k))?;
        let mean = mean(&coherence(&model, bow, scope));
        return Ok(KSelection { report: CoherenceReport { candidates: vec![(k, mean)], selected: k }, model });
    }
    let mut scores = Vec::with_capacity(grid.len());
    let mut models = Vec::with_capacity(grid.len());
    for &k in &grid {
        let model = fit_lda(bow, &settings.for_k(k))?;
        scores.push((k, mean(&coherence(&model, bow, scope))));
        models.push(model);
    }
    let report = CoherenceReport::from_scores(scores).expect("non-empty grid");
    let at = grid.iter().position(|&k| k == report.selected).expect("selected from grid");
    let model = models.swap_remove(at);
    Ok(KSelection { report, model })
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}
