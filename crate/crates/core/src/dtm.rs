//! Dynamic topic model: each topic's natural parameters follow a Gaussian
//! random walk across time slices, `beta_t ~ N(beta_{t-1}, sigma2 I)`, and so
//! do the logistic-normal proportion means `alpha_t`.
//!
//! Estimation is two-stage. Every slice gets its own collapsed-Gibbs LDA fit,
//! warm-started from the previous slice; topics are aligned between
//! consecutive slices by maximum-cosine assignment; then each free natural
//! parameter coordinate is smoothed by an exact Rauch-Tung-Striebel pass over
//! the slice pseudo-observations. This approximates the variational
//! treatment, it is not a joint posterior over all latent variables.

use alloc::vec;
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::max_similarity_assignment;
use crate::calendar::DateRange;
use crate::lda::{fit_documents, top_ids, Init, LdaError, LdaSettings};
use crate::preprocess::{BowCorpus, BowDocument, TokenId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DtmError {
    #[error("natural parameters must be finite with the last coordinate exactly 0")]
    Gauge,
    #[error("natural parameter vectors need at least two coordinates")]
    TooShort,
    #[error("not a probability vector (sum {sum})")]
    NotSimplex { sum: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("chain variance must be finite and positive, got {0}")]
    ChainVariance(f64),
    #[error("at least two topics are required")]
    TooFewTopics,
    #[error("no slice has enough tokens to fit {k} topics")]
    NoObservedSlices { k: usize },
    #[error("slice merge factor must be at least 1")]
    MergeFactor,
    #[error(transparent)]
    Lda(#[from] LdaError),
}

/// Natural parameters of a multinomial, `beta_i = log(pi_i / pi_V)`, so the
/// last coordinate is pinned to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct NaturalTopic(Vec<f64>);

impl NaturalTopic {
    pub fn new(beta: Vec<f64>) -> Result<Self, DtmError> {
        if beta.len() < 2 {
            return Err(DtmError::TooShort);
        }
        if beta.last() != Some(&0.0) || beta.iter().any(|x| !x.is_finite()) {
            return Err(DtmError::Gauge);
        }
        Ok(Self(beta))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for NaturalTopic {
    type Error = DtmError;

    fn try_from(v: Vec<f64>) -> Result<Self, DtmError> {
        Self::new(v)
    }
}

impl From<NaturalTopic> for Vec<f64> {
    fn from(t: NaturalTopic) -> Self {
        t.0
    }
}

/// Softmax with max subtraction.
pub fn natural_to_mean(beta: &NaturalTopic) -> Vec<f64> {
    softmax(beta.as_slice())
}

fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = x.iter().map(|&b| libm::exp(b - max)).collect();
    let sum: f64 = out.iter().sum();
    for p in out.iter_mut() {
        *p /= sum;
    }
    out
}

/// Floors every probability at `floor`, renormalises, and takes log-ratios
/// against the last coordinate.
pub fn mean_to_natural(pi: &[f64], floor: f64) -> Result<NaturalTopic, DtmError> {
    if pi.len() < 2 {
        return Err(DtmError::TooShort);
    }
    let sum: f64 = pi.iter().sum();
    if !(libm::fabs(sum - 1.0) <= 1e-9) || pi.iter().any(|&p| !(p >= 0.0)) {
        return Err(DtmError::NotSimplex { sum });
    }
    let floored: Vec<f64> = pi.iter().map(|&p| p.max(floor)).collect();
    let total: f64 = floored.iter().sum();
    let last = libm::log(floored[floored.len() - 1] / total);
    let mut beta: Vec<f64> = floored.iter().map(|&p| libm::log(p / total) - last).collect();
    *beta.last_mut().expect("len >= 2") = 0.0;
    NaturalTopic::new(beta)
}

/// `log N(beta_t | beta_prev, sigma2 I)` over the V - 1 free coordinates.
pub fn chain_logdensity(beta_t: &NaturalTopic, beta_prev: &NaturalTopic, sigma2: f64) -> Result<f64, DtmError> {
    if beta_t.dim() != beta_prev.dim() {
        return Err(DtmError::Dimension(beta_t.dim(), beta_prev.dim()));
    }
    check_sigma2(sigma2)?;
    let free = beta_t.dim() - 1;
    let sq: f64 = beta_t.0[..free]
        .iter()
        .zip(&beta_prev.0[..free])
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(-(free as f64 / 2.0) * libm::log(2.0 * core::f64::consts::PI * sigma2) - sq / (2.0 * sigma2))
}

fn check_sigma2(sigma2: f64) -> Result<(), DtmError> {
    if sigma2.is_finite() && sigma2 > 0.0 {
        Ok(())
    } else {
        Err(DtmError::ChainVariance(sigma2))
    }
}

/// Noisy reading `value ~ N(x_t, variance)` of one chain coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarObservation {
    pub value: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedState {
    pub mean: f64,
    pub variance: f64,
    pub filtered_mean: f64,
    pub filtered_variance: f64,
}

/// Exact posterior of the scalar random walk `x_1 ~ N(prior_mean, prior_var)`,
/// `x_t = x_{t-1} + N(0, sigma2)`, given the observed slices. Forward Kalman
/// filter followed by the RTS backward pass; `None` slices only propagate
/// the prediction.
pub fn kalman_smooth(
    obs: &[Option<ScalarObservation>],
    sigma2: f64,
    prior_mean: f64,
    prior_var: f64,
) -> Vec<SmoothedState> {
    let n = obs.len();
    let mut pred = Vec::with_capacity(n);
    let mut filt: Vec<(f64, f64)> = Vec::with_capacity(n);
    for (t, o) in obs.iter().enumerate() {
        let (m, p) = match t {
            0 => (prior_mean, prior_var),
            _ => (filt[t - 1].0, filt[t - 1].1 + sigma2),
        };
        pred.push((m, p));
        filt.push(match o {
            Some(o) => {
                let gain = p / (p + o.variance);
                (m + gain * (o.value - m), p * o.variance / (p + o.variance))
            }
            None => (m, p),
        });
    }
    let mut out: Vec<SmoothedState> = filt
        .iter()
        .map(|&(m, p)| SmoothedState { mean: m, variance: p, filtered_mean: m, filtered_variance: p })
        .collect();
    for t in (0..n.saturating_sub(1)).rev() {
        let (fm, fp) = filt[t];
        let (pm, pp) = pred[t + 1];
        let j = fp / pp;
        let next = out[t + 1];
        out[t].mean = fm + j * (next.mean - pm);
        out[t].variance = fp + j * j * (next.variance - pp);
    }
    out
}

/// Per-slice pseudo-observation of one topic's natural parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceObservation {
    pub observed: bool,
    /// Gauge-fixed natural parameters (ignored when unobserved).
    pub values: Vec<f64>,
    /// Per-coordinate observation variance, > 0.
    pub variances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainObservation {
    pub dim: usize,
    pub slices: Vec<SliceObservation>,
}

/// Smooths the V - 1 free coordinates independently. The gauge coordinate
/// stays exactly 0 with variance 0.
pub fn smooth_chain(
    obs: &ChainObservation,
    sigma2: f64,
    prior_mean: f64,
    prior_var: f64,
) -> Vec<(NaturalTopic, Vec<f64>)> {
    let t_count = obs.slices.len();
    let mut means = vec![vec![0.0; obs.dim]; t_count];
    let mut vars = vec![vec![0.0; obs.dim]; t_count];
    let mut column = Vec::with_capacity(t_count);
    for coord in 0..obs.dim - 1 {
        column.clear();
        column.extend(obs.slices.iter().map(|s| {
            s.observed.then(|| ScalarObservation { value: s.values[coord], variance: s.variances[coord] })
        }));
        for (t, st) in kalman_smooth(&column, sigma2, prior_mean, prior_var).into_iter().enumerate() {
            means[t][coord] = st.mean;
            vars[t][coord] = st.variance;
        }
    }
    means
        .into_iter()
        .zip(vars)
        .map(|(m, v)| (NaturalTopic::new(m).expect("smoothed means are finite"), v))
        .collect()
}

/// Settings for [`fit_dtm`]. Per-slice LDA uses `lda` with seed
/// `lda.seed + slice index`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtmConfig {
    pub k: usize,
    pub sigma2: f64,
    pub lda: LdaSettings,
    /// Observation variance is `obs_scale / (tokens in topic + 1)`.
    pub obs_scale: f64,
    pub variance_floor: f64,
    pub probability_floor: f64,
    pub prior_mean: f64,
    pub prior_variance: f64,
    /// Consecutive days merged into one slice.
    pub merge_days: usize,
}

impl DtmConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            sigma2: 0.005,
            lda: LdaSettings::default(),
            obs_scale: 1.0,
            variance_floor: 1e-4,
            probability_floor: 1e-9,
            prior_mean: 0.0,
            prior_variance: 1e6,
            merge_days: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtmModel {
    pub config: DtmConfig,
    /// Calendar span of each slice.
    pub slices: Vec<DateRange>,
    /// Whether the slice contributed a pseudo-observation.
    pub observed: Vec<bool>,
    /// Smoothed topic natural parameters, `[t][k]`.
    pub topics: Vec<Vec<NaturalTopic>>,
    /// Posterior variance per coordinate, `[t][k][w]`.
    pub topic_variances: Vec<Vec<Vec<f64>>>,
    /// Smoothed logistic-normal proportion means, `[t]`, K coordinates.
    pub alpha: Vec<NaturalTopic>,
    pub alpha_variances: Vec<Vec<f64>>,
    /// Tokens assigned to each aligned topic by the slice fit, `[t][k]`.
    pub topic_tokens: Vec<Vec<usize>>,
}

impl DtmModel {
    pub fn num_slices(&self) -> usize {
        self.slices.len()
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn vocab_size(&self) -> usize {
        self.topics[0][0].dim()
    }

    pub fn slice_dates(&self) -> Vec<NaiveDate> {
        self.slices.iter().map(|r| r.start).collect()
    }

    pub fn slice_of(&self, date: NaiveDate) -> Option<usize> {
        self.slices.iter().position(|r| r.contains(date))
    }

    /// Topic-word distributions of slice `t`.
    pub fn topic_means(&self, t: usize) -> Vec<Vec<f64>> {
        self.topics[t].iter().map(natural_to_mean).collect()
    }

    /// Log-likelihood of `doc` under each topic of slice `t`.
    pub fn doc_log_likelihoods(&self, t: usize, doc: &BowDocument) -> Vec<f64> {
        self.topic_means(t)
            .iter()
            .map(|pi| doc.counts.iter().map(|&(w, c)| c as f64 * libm::log(pi[w as usize])).sum())
            .collect()
    }

    /// Posterior topic weights of `doc` under a uniform topic prior.
    pub fn doc_topic_weights(&self, t: usize, doc: &BowDocument) -> Vec<f64> {
        softmax(&self.doc_log_likelihoods(t, doc))
    }

    /// Smoothed mean topic proportions of slice `t`.
    pub fn proportions(&self, t: usize) -> Vec<f64> {
        natural_to_mean(&self.alpha[t])
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = libm::sqrt(a.iter().map(|x| x * x).sum());
    let nb = libm::sqrt(b.iter().map(|x| x * x).sum());
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Per-slice fit after topic alignment.
struct SliceFit {
    phi: Vec<Vec<f64>>,
    mean_theta: Vec<f64>,
    topic_tokens: Vec<usize>,
    docs: usize,
}

/// Permutation `perm` with `perm[i]` = current topic matched to reference
/// topic `i`, maximising total phi-row cosine.
pub fn align_topics(reference: &[Vec<f64>], current: &[Vec<f64>]) -> Vec<usize> {
    let sim: Vec<Vec<f64>> = reference.iter().map(|r| current.iter().map(|c| cosine(r, c)).collect()).collect();
    max_similarity_assignment(&sim)
}

/// Aligns a whole sequence of per-slice topic sets, each to its aligned
/// predecessor. Returns the permutation applied to every slice.
pub fn align_chain(phis: &[Vec<Vec<f64>>]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::with_capacity(phis.len());
    let mut previous: Option<Vec<Vec<f64>>> = None;
    for phi in phis {
        let perm = match &previous {
            Some(prev) => align_topics(prev, phi),
            None => (0..phi.len()).collect(),
        };
        previous = Some(perm.iter().map(|&j| phi[j].clone()).collect());
        out.push(perm);
    }
    out
}

fn merged_slices(bow: &BowCorpus, merge: usize) -> Vec<(DateRange, core::ops::Range<usize>)> {
    bow.slices()
        .chunks(merge)
        .map(|chunk| {
            let first = &chunk[0];
            let last = &chunk[chunk.len() - 1];
            let range = DateRange::new(first.date, last.date).expect("slices ascend");
            (range, first.docs.start..last.docs.end)
        })
        .collect()
}

/// Two-stage DTM fit (see the module docs). Slices with fewer tokens than
/// topics are carried as unobserved.
pub fn fit_dtm(bow: &BowCorpus, config: &DtmConfig) -> Result<DtmModel, DtmError> {
    let k = config.k;
    if k < 2 {
        return Err(DtmError::TooFewTopics);
    }
    if config.merge_days == 0 {
        return Err(DtmError::MergeFactor);
    }
    check_sigma2(config.sigma2)?;
    let v = bow.vocab().len();
    let slices = merged_slices(bow, config.merge_days);

    let mut fits: Vec<Option<SliceFit>> = Vec::with_capacity(slices.len());
    let mut previous: Option<Vec<Vec<f64>>> = None;
    for (t, (_, docs)) in slices.iter().enumerate() {
        let docs = &bow.docs()[docs.clone()];
        let tokens: usize = docs.iter().map(BowDocument::len).sum();
        if tokens < k {
            fits.push(None);
            continue;
        }
        let mut lda = config.lda.for_k(k);
        lda.seed = lda.seed.wrapping_add(t as u64);
        let init = previous.as_deref().map_or(Init::Uniform, Init::WarmStart);
        let model = fit_documents(docs, v, &lda, init, |_| {})?;
        let perm = match &previous {
            Some(prev) => align_topics(prev, &model.phi),
            None => (0..k).collect(),
        };
        let counts = model.topic_token_counts();
        let phi: Vec<Vec<f64>> = perm.iter().map(|&j| model.phi[j].clone()).collect();
        let mut mean_theta = vec![0.0; k];
        for row in &model.theta {
            for (i, &j) in perm.iter().enumerate() {
                mean_theta[i] += row[j];
            }
        }
        for x in mean_theta.iter_mut() {
            *x /= docs.len() as f64;
        }
        previous = Some(phi.clone());
        fits.push(Some(SliceFit {
            phi,
            mean_theta,
            topic_tokens: perm.iter().map(|&j| counts[j]).collect(),
            docs: docs.len(),
        }));
    }
    if fits.iter().all(Option::is_none) {
        return Err(DtmError::NoObservedSlices { k });
    }

    let variance = |n: usize| (config.obs_scale / (n as f64 + 1.0)).max(config.variance_floor);
    let floor = config.probability_floor;
    let unobserved = |dim| SliceObservation { observed: false, values: vec![0.0; dim], variances: vec![1.0; dim] };

    let t_count = slices.len();
    let mut topics = vec![Vec::with_capacity(k); t_count];
    let mut topic_variances = vec![Vec::with_capacity(k); t_count];
    for topic in 0..k {
        let mut chain = ChainObservation { dim: v, slices: Vec::with_capacity(t_count) };
        for fit in &fits {
            chain.slices.push(match fit {
                Some(f) => SliceObservation {
                    observed: true,
                    values: mean_to_natural(&f.phi[topic], floor)?.0,
                    variances: vec![variance(f.topic_tokens[topic]); v],
                },
                None => unobserved(v),
            });
        }
        for (t, (beta, var)) in smooth_chain(&chain, config.sigma2, config.prior_mean, config.prior_variance)
            .into_iter()
            .enumerate()
        {
            topics[t].push(beta);
            topic_variances[t].push(var);
        }
    }

    let mut alpha_chain = ChainObservation { dim: k, slices: Vec::with_capacity(t_count) };
    for fit in &fits {
        alpha_chain.slices.push(match fit {
            Some(f) => SliceObservation {
                observed: true,
                values: mean_to_natural(&f.mean_theta, floor)?.0,
                variances: vec![variance(f.docs); k],
            },
            None => unobserved(k),
        });
    }
    let (alpha, alpha_variances) = smooth_chain(&alpha_chain, config.sigma2, config.prior_mean, config.prior_variance)
        .into_iter()
        .unzip();

    Ok(DtmModel {
        config: *config,
        slices: slices.iter().map(|(r, _)| *r).collect(),
        observed: fits.iter().map(Option::is_some).collect(),
        topic_tokens: fits
            .iter()
            .map(|f| f.as_ref().map_or_else(|| vec![0; k], |f| f.topic_tokens.clone()))
            .collect(),
        topics,
        topic_variances,
        alpha,
        alpha_variances,
    })
}

/// Top-`n` words of topic `k` in every slice, ties by token id.
pub fn topic_trajectory(model: &DtmModel, k: usize, n: usize) -> Vec<Vec<TokenId>> {
    model.topics.iter().map(|row| top_ids(&natural_to_mean(&row[k]), n)).collect()
}
