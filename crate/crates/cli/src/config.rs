//! Flat `key = value` run configuration.
//!
//! Relative paths in a config file resolve against the file's directory.
//! Command-line overrides replace file values. The canonical echo lists every
//! key except `out` in a fixed order, with defaults filled in, so it is
//! identical for identical runs wherever their output goes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use crisiscomm_core::calendar::{parse_date, DateRange};
use crisiscomm_core::chronology::FrequencyMode;
use crisiscomm_core::lda::{CoherenceScope, LdaSettings};

use crate::error::{CliError, Result};

/// Every key with its default; an empty default means unset.
const KEYS: &[(&str, &str)] = &[
    ("tweets", ""),
    ("indicators", ""),
    ("lexicon", ""),
    ("stoplist", ""),
    ("window_start", "2020-02-21"),
    ("window_end", "2020-06-06"),
    ("agency", ""),
    ("agencies", ""),
    ("drop_retweets", "false"),
    ("strict", "false"),
    ("min_df", ""),
    ("suffix_stripping", "false"),
    ("k_grid", "2,3,5,8"),
    ("alpha", ""),
    ("eta", "0.01"),
    ("iterations", "1000"),
    ("burn_in", "500"),
    ("seed", "0"),
    ("coherence_scope", "document"),
    ("dtm_k", ""),
    ("sigma2", "0.005"),
    ("merge_days", "1"),
    ("sentiment_window", "7"),
    ("negation", "false"),
    ("topic_model", "lda"),
    ("frequency_mode", "hard"),
    ("top_words", "10"),
    ("charts", "false"),
    ("out", "out"),
];

/// Which fitted model drives topic frequencies in the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Lda,
    Dtm,
}

/// Unvalidated key-value pairs plus the directory relative paths resolve against.
#[derive(Debug, Clone)]
pub struct RawConfig {
    values: BTreeMap<String, (String, PathBuf)>,
    base_dir: PathBuf,
}

impl RawConfig {
    pub fn new(base_dir: impl Into<PathBuf>) -> Self {
        Self { values: BTreeMap::new(), base_dir: base_dir.into() }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg = Self::new(base_dir);
        let mut seen = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return Err(CliError::Config(format!("line {}: duplicate key `{k}`", i + 1)));
            }
            let base = cfg.base_dir.clone();
            cfg.set_with_base(k, v.trim(), base)?;
        }
        Ok(cfg)
    }

    /// Override a key; relative paths resolve against `base`.
    pub fn set_with_base(&mut self, key: &str, value: &str, base: PathBuf) -> Result<()> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
        self.values.insert(key.to_string(), (value.to_string(), base));
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let base = self.base_dir.clone();
        self.set_with_base(key, value, base)
    }

    fn raw(&self, key: &str) -> &str {
        match self.values.get(key) {
            Some((v, _)) => v,
            None => KEYS.iter().find(|(k, _)| *k == key).map(|(_, d)| *d).expect("known key"),
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.raw(key);
        if v.is_empty() {
            return None;
        }
        let base = self.values.get(key).map_or(&self.base_dir, |(_, b)| b);
        Some(base.join(v))
    }

    /// `key = value` for every key but `out`, in declaration order.
    pub fn canonical_echo(&self) -> String {
        let mut s = String::new();
        for (k, _) in KEYS.iter().filter(|(k, _)| *k != "out") {
            writeln!(s, "{k} = {}", self.raw(k)).expect("string write");
        }
        s
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        RunConfig::from_raw(self)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub tweets: PathBuf,
    pub indicators: PathBuf,
    pub lexicon: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub window: DateRange,
    pub agency: Option<String>,
    pub agencies: Option<BTreeSet<String>>,
    pub drop_retweets: bool,
    pub strict: bool,
    pub min_df: Option<usize>,
    pub suffix_stripping: bool,
    pub k_grid: Vec<usize>,
    pub lda: LdaSettings,
    pub coherence_scope: CoherenceScope,
    pub dtm_k: Option<usize>,
    pub sigma2: f64,
    pub merge_days: usize,
    pub sentiment_window: usize,
    pub negation: bool,
    pub topic_model: ModelKind,
    pub frequency_mode: FrequencyMode,
    pub top_words: usize,
    pub charts: bool,
    pub out: PathBuf,
    pub echo: String,
}

fn parse<T: FromStr>(raw: &RawConfig, key: &str) -> Result<T> {
    let v = raw.raw(key);
    v.parse().map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn optional<T: FromStr>(raw: &RawConfig, key: &str) -> Result<Option<T>> {
    if raw.raw(key).is_empty() {
        Ok(None)
    } else {
        parse(raw, key).map(Some)
    }
}

fn date(raw: &RawConfig, key: &str) -> Result<NaiveDate> {
    parse_date(raw.raw(key)).ok_or_else(|| CliError::Config(format!("`{key}`: expected YYYY-MM-DD")))
}

fn existing(raw: &RawConfig, key: &str, required: bool) -> Result<Option<PathBuf>> {
    match raw.path(key) {
        None if required => Err(CliError::Config(format!("`{key}` is required"))),
        None => Ok(None),
        Some(p) if !p.is_file() => Err(CliError::Config(format!("`{key}`: no such file {}", p.display()))),
        Some(p) => Ok(Some(p)),
    }
}

fn check(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg.to_string()))
    }
}

impl RunConfig {
    fn from_raw(raw: &RawConfig) -> Result<Self> {
        let window = DateRange::new(date(raw, "window_start")?, date(raw, "window_end")?)
            .ok_or_else(|| CliError::Config("window_start is after window_end".into()))?;
        let list = |key: &str| -> Option<BTreeSet<String>> {
            let v = raw.raw(key);
            (!v.is_empty()).then(|| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
        };
        let k_grid: Vec<usize> = raw
            .raw("k_grid")
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| CliError::Config("`k_grid`: expected comma-separated integers".into()))?;
        let lda = LdaSettings {
            alpha: optional(raw, "alpha")?,
            eta: parse(raw, "eta")?,
            iterations: parse(raw, "iterations")?,
            burn_in: parse(raw, "burn_in")?,
            seed: parse(raw, "seed")?,
        };
        let coherence_scope = match raw.raw("coherence_scope") {
            "document" => CoherenceScope::Document,
            "day" => CoherenceScope::Day,
            other => return Err(CliError::Config(format!("`coherence_scope`: unknown scope `{other}`"))),
        };
        let topic_model = match raw.raw("topic_model") {
            "lda" => ModelKind::Lda,
            "dtm" => ModelKind::Dtm,
            other => return Err(CliError::Config(format!("`topic_model`: expected lda or dtm, got `{other}`"))),
        };
        let frequency_mode = match raw.raw("frequency_mode") {
            "hard" => FrequencyMode::Hard,
            "soft" => FrequencyMode::Soft,
            other => return Err(CliError::Config(format!("`frequency_mode`: expected hard or soft, got `{other}`"))),
        };
        let cfg = RunConfig {
            tweets: existing(raw, "tweets", true)?.expect("required"),
            indicators: existing(raw, "indicators", true)?.expect("required"),
            lexicon: existing(raw, "lexicon", false)?,
            stoplist: existing(raw, "stoplist", false)?,
            window,
            agency: optional(raw, "agency")?,
            agencies: list("agencies"),
            drop_retweets: parse(raw, "drop_retweets")?,
            strict: parse(raw, "strict")?,
            min_df: optional(raw, "min_df")?,
            suffix_stripping: parse(raw, "suffix_stripping")?,
            k_grid,
            lda,
            coherence_scope,
            dtm_k: optional(raw, "dtm_k")?,
            sigma2: parse(raw, "sigma2")?,
            merge_days: parse(raw, "merge_days")?,
            sentiment_window: parse(raw, "sentiment_window")?,
            negation: parse(raw, "negation")?,
            topic_model,
            frequency_mode,
            top_words: parse(raw, "top_words")?,
            charts: parse(raw, "charts")?,
            out: raw.path("out").ok_or_else(|| CliError::Config("`out` is required".into()))?,
            echo: raw.canonical_echo(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        check(!self.k_grid.is_empty(), "`k_grid` is empty")?;
        check(self.k_grid.iter().all(|&k| k >= 2), "`k_grid`: every candidate must be at least 2")?;
        for &k in self.k_grid.iter().chain(self.dtm_k.as_ref()) {
            self.lda.for_k(k).validate_sampler().map_err(|e| CliError::Config(e.to_string()))?;
        }
        check(self.min_df != Some(0), "`min_df` must be at least 1")?;
        check(self.dtm_k.is_none_or(|k| k >= 2), "`dtm_k` must be at least 2")?;
        check(self.sigma2 > 0.0 && self.sigma2.is_finite(), "`sigma2` must be positive")?;
        check(self.merge_days >= 1, "`merge_days` must be at least 1")?;
        check(self.sentiment_window >= 1, "`sentiment_window` must be at least 1")?;
        check(self.top_words >= 1, "`top_words` must be at least 1")?;
        Ok(())
    }
}
