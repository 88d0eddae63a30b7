//! The subcommands. Each reads its inputs from the config and upstream
//! artifacts in the output directory and writes its own artifacts there.

use std::fs;
use std::path::PathBuf;

use crisiscomm_core::chronology::{align, default_segmentation, topic_frequency, TopicModel};
use crisiscomm_core::corpus::{Corpus, IndicatorSeries, IngestOptions};
use crisiscomm_core::dtm::{fit_dtm, DtmConfig};
use crisiscomm_core::lda::select_k;
use crisiscomm_core::preprocess::{build_vocabulary, default_min_df, to_bow, BowCorpus, Tokenizer};
use crisiscomm_core::sentiment::{daily_sentiment, SentimentScorer};
use log::{info, warn};

use crate::artifacts::{
    check_vocab, read_json, read_versioned, write_json, DtmArtifact, IngestSummary, LdaArtifact, SentimentArtifact,
    CONFIG_ECHO_FILE, CORPUS_FILE, DTM_FILE, INDICATORS_FILE, INGEST_FILE, LDA_FILE, SENTIMENT_FILE,
};
use crate::config::{ModelKind, RunConfig};
use crate::error::{CliError, Result};
use crate::formats::{read_indicators, read_lexicon, read_stoplist, read_tweets, write_tweets_file};
use crate::report::{emit_report, ReportFiles};

fn artifact(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out.join(name)
}

fn prepare_out(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out).map_err(CliError::io(&cfg.out))?;
    let echo = artifact(cfg, CONFIG_ECHO_FILE);
    fs::write(&echo, &cfg.echo).map_err(CliError::io(echo))
}

pub fn cmd_ingest(cfg: &RunConfig) -> Result<()> {
    prepare_out(cfg)?;
    let opts = IngestOptions {
        window: Some(cfg.window),
        agency_filter: cfg.agency.clone(),
        known_agencies: cfg.agencies.clone(),
        strict: cfg.strict,
        drop_retweets: cfg.drop_retweets,
    };
    let (corpus, report) = read_tweets(&cfg.tweets, &opts)?;
    for e in &report.malformed {
        warn!("{}: skipped {e}", cfg.tweets.display());
    }
    if report.out_of_window > 0 {
        warn!("{} records outside the analysis window dropped", report.out_of_window);
    }
    let indicators = read_indicators(&cfg.indicators)?;
    if indicators.fill_count() > 0 {
        warn!("{} missing indicator days zero-filled", indicators.fill_count());
    }
    write_tweets_file(&corpus, &artifact(cfg, CORPUS_FILE))?;
    write_json(&artifact(cfg, INDICATORS_FILE), &indicators)?;
    let summary = IngestSummary::new(&report, corpus.span(), corpus.agencies(), &indicators);
    write_json(&artifact(cfg, INGEST_FILE), &summary)?;
    info!("ingested {} tweets, skipped {}", corpus.len(), report.skipped_count());
    Ok(())
}

/// The ingested corpus, read back strictly.
pub fn load_corpus(cfg: &RunConfig) -> Result<Corpus> {
    let path = artifact(cfg, CORPUS_FILE);
    if !path.is_file() {
        return Err(CliError::MissingArtifact { path, remedy: "ingest" });
    }
    let opts = IngestOptions { strict: true, ..IngestOptions::default() };
    Ok(read_tweets(&path, &opts)?.0)
}

pub fn tokenizer(cfg: &RunConfig) -> Result<Tokenizer> {
    Ok(Tokenizer::new(read_stoplist(cfg.stoplist.as_deref())?).with_suffix_stripping(cfg.suffix_stripping))
}

/// Vocabulary and bag-of-words corpus, rebuilt deterministically from the corpus.
pub fn prepare_bow(cfg: &RunConfig, corpus: &Corpus) -> Result<BowCorpus> {
    let tok = tokenizer(cfg)?;
    let docs: Vec<Vec<String>> = corpus.records().iter().map(|r| tok.tokenize(&r.text)).collect();
    let min_df = cfg.min_df.unwrap_or_else(|| default_min_df(corpus.len()));
    let vocab = build_vocabulary(&docs, min_df, tok.stoplist())?;
    let bow = to_bow(corpus, &vocab, &tok);
    if bow.dropped() > 0 {
        warn!("{} tweets have no in-vocabulary token and are left out of topic models", bow.dropped());
    }
    Ok(bow)
}

pub fn cmd_fit_lda(cfg: &RunConfig) -> Result<()> {
    prepare_out(cfg)?;
    let corpus = load_corpus(cfg)?;
    let bow = prepare_bow(cfg, &corpus)?;
    let sel = select_k(&bow, &cfg.k_grid, &cfg.lda, cfg.coherence_scope)?;
    info!("selected K = {}", sel.report.selected);
    write_json(&artifact(cfg, LDA_FILE), &LdaArtifact::new(bow.vocab(), sel.report, sel.model))
}

fn load_lda(cfg: &RunConfig, bow: &BowCorpus) -> Result<LdaArtifact> {
    let path = artifact(cfg, LDA_FILE);
    let art: LdaArtifact = read_versioned(&path, "fit-lda")?;
    check_vocab(&art.vocab_hash, bow.vocab(), path.clone(), "fit-lda")?;
    if art.model.num_docs() != bow.len() {
        return Err(CliError::StaleArtifact { path, remedy: "fit-lda" });
    }
    Ok(art)
}

fn load_dtm(cfg: &RunConfig, bow: &BowCorpus) -> Result<DtmArtifact> {
    let path = artifact(cfg, DTM_FILE);
    let art: DtmArtifact = read_versioned(&path, "fit-dtm")?;
    check_vocab(&art.vocab_hash, bow.vocab(), path, "fit-dtm")?;
    Ok(art)
}

/// Fits the dynamic model with `dtm_k` topics, or the K chosen by `fit-lda`.
pub fn cmd_fit_dtm(cfg: &RunConfig) -> Result<()> {
    prepare_out(cfg)?;
    let corpus = load_corpus(cfg)?;
    let bow = prepare_bow(cfg, &corpus)?;
    let k = match cfg.dtm_k {
        Some(k) => k,
        None => load_lda(cfg, &bow)?.model.k(),
    };
    let dtm_cfg = DtmConfig { sigma2: cfg.sigma2, lda: cfg.lda, merge_days: cfg.merge_days, ..DtmConfig::new(k) };
    let model = fit_dtm(&bow, &dtm_cfg)?;
    let unobserved = model.observed.iter().filter(|o| !**o).count();
    if unobserved > 0 {
        warn!("{unobserved} of {} slices too sparse to observe; smoothed from neighbours", model.num_slices());
    }
    write_json(&artifact(cfg, DTM_FILE), &DtmArtifact::new(bow.vocab(), model))
}

pub fn cmd_sentiment(cfg: &RunConfig) -> Result<()> {
    prepare_out(cfg)?;
    let corpus = load_corpus(cfg)?;
    let scorer = SentimentScorer::new(read_lexicon(cfg.lexicon.as_deref())?, tokenizer(cfg)?).with_negation(cfg.negation);
    let series = daily_sentiment(&corpus, &scorer);
    write_json(&artifact(cfg, SENTIMENT_FILE), &SentimentArtifact::new(&series, cfg.negation))
}

pub fn cmd_report(cfg: &RunConfig) -> Result<ReportFiles> {
    prepare_out(cfg)?;
    let corpus = load_corpus(cfg)?;
    let bow = prepare_bow(cfg, &corpus)?;
    let indicators: IndicatorSeries = read_json(&artifact(cfg, INDICATORS_FILE), "ingest")?;
    let sent_path = artifact(cfg, SENTIMENT_FILE);
    let sentiment = read_versioned::<SentimentArtifact>(&sent_path, "sentiment")?.to_series(&sent_path)?;
    if sentiment.range() != corpus.span() {
        return Err(CliError::StaleArtifact { path: sent_path, remedy: "sentiment" });
    }
    let (lda, dtm);
    let model = match cfg.topic_model {
        ModelKind::Lda => {
            lda = load_lda(cfg, &bow)?;
            TopicModel::Lda(&lda.model)
        }
        ModelKind::Dtm => {
            dtm = load_dtm(cfg, &bow)?;
            TopicModel::Dtm(&dtm.model)
        }
    };
    let tf = topic_frequency(model, &bow, cfg.frequency_mode)?;
    let seg = default_segmentation();
    let report = align(&tf, &sentiment, &indicators, &seg, cfg.sentiment_window)?.with_top_words(&bow, cfg.top_words)?;
    for (period, summary) in seg.periods().iter().zip(&report.periods) {
        if summary.top_words.is_empty() {
            warn!("period {} has no tweets", period.id);
        }
    }
    emit_report(&report, cfg.frequency_mode, &cfg.out.join("report"), cfg.charts)
}

/// Every stage in order.
pub fn run_all(cfg: &RunConfig) -> Result<ReportFiles> {
    cmd_ingest(cfg)?;
    cmd_fit_lda(cfg)?;
    cmd_fit_dtm(cfg)?;
    cmd_sentiment(cfg)?;
    cmd_report(cfg)
}

