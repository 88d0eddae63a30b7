//! The bundled synthetic archive: 500 agency tweets over 2020-02-21..2020-06-06
//! whose theme mix and tone shift between the four periods, and a daily
//! indicator table peaking at 40000 cases and 2500 deaths on 2020-04-10 with
//! one missing day.

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use crisiscomm_core::calendar::DateRange;
use crisiscomm_core::chronology::default_segmentation;
use crisiscomm_core::corpus::RawTweet;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, Result};

pub const TWEETS: usize = 500;
pub const SEED: u64 = 2020;
pub const PEAK_CASES: u64 = 40_000;
pub const PEAK_DEATHS: u64 = 2_500;

const AGENCIES: &[&str] = &["WHO", "CDC", "FEMA", "FDOT"];

const THEMES: &[&[&str]] = &[
    &["cases", "outbreak", "virus", "spread", "testing", "confirmed", "coronavirus", "symptoms", "travel", "risk"],
    &["masks", "wash", "hands", "distancing", "social", "stay", "home", "protect", "cover", "cough"],
    &["emergency", "supplies", "shelter", "food", "assistance", "disaster", "funding", "hospitals", "ventilators", "ppe"],
    &["reopening", "roads", "business", "guidelines", "safely", "phase", "vaccine", "research", "workers", "traffic"],
];

/// Theme weights per period.
const MIX: [[f64; 4]; 4] = [
    [0.60, 0.20, 0.10, 0.10],
    [0.15, 0.45, 0.30, 0.10],
    [0.10, 0.30, 0.45, 0.15],
    [0.10, 0.15, 0.15, 0.60],
];

const NEGATIVE: &[&str] = &["crisis", "panic", "worried", "shortage", "deaths", "danger", "severe", "fear"];
const POSITIVE: &[&str] = &["safe", "help", "thank", "hope", "support", "together", "recovery", "proud"];
/// Probability that a tone word is positive, per period.
const UPBEAT: [f64; 4] = [0.40, 0.30, 0.45, 0.70];

const CONFIG: &str = "\
# Bundled synthetic fixture: short texts favour a small alpha.
tweets = tweets.jsonl
indicators = indicators.csv
k_grid = 3,4,5
alpha = 0.1
seed = 7
merge_days = 7
sentiment_window = 7
charts = true
";

/// The date left out of the indicator table.
pub fn missing_indicator_day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 5, 3).expect("valid")
}

pub fn peak_day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 4, 10).expect("valid")
}

fn pick(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

pub fn tweets() -> Vec<RawTweet> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let window = DateRange::first_wave();
    let seg = default_segmentation();
    let mut days: Vec<usize> = (0..TWEETS - 2).map(|_| rng.gen_range(0..window.len())).collect();
    days.push(0);
    days.push(window.len() - 1);
    days.sort_unstable();

    let mut out = Vec::with_capacity(TWEETS);
    for (i, &d) in days.iter().enumerate() {
        let date = window.date_at(d);
        let period = seg.index_of(date).expect("inside window");
        let agency = AGENCIES[rng.gen_range(0..AGENCIES.len())];
        let mut mix = MIX[period];
        match agency {
            "FEMA" => mix[2] *= 2.0,
            "FDOT" => mix[3] *= 2.0,
            _ => {}
        }
        let theme = THEMES[pick(&mix, &mut rng)];
        let len = rng.gen_range(5..=9);
        let mut words: Vec<&str> = (0..len)
            .map(|_| {
                // Earlier theme words are more frequent.
                let w: Vec<f64> = (0..theme.len()).map(|j| 1.0 / (j + 1) as f64).collect();
                theme[pick(&w, &mut rng)]
            })
            .collect();
        for _ in 0..rng.gen_range(1..=2) {
            let pool = if rng.gen_bool(UPBEAT[period]) { POSITIVE } else { NEGATIVE };
            words.insert(rng.gen_range(0..=words.len()), pool.choose(&mut rng).expect("non-empty"));
        }
        let mut text = String::new();
        for (j, w) in words.iter().enumerate() {
            if j == 0 {
                let mut c = w.chars();
                let first = c.next().expect("non-empty").to_uppercase();
                let _ = write!(text, "{first}{}", c.as_str());
            } else {
                let _ = write!(text, " {w}");
            }
        }
        text.push('.');
        if rng.gen_bool(0.2) {
            text.push_str(" #COVID19");
        }
        if rng.gen_bool(0.2) {
            let _ = write!(text, " @{agency}gov");
        }
        if rng.gen_bool(0.3) {
            let _ = write!(text, " https://t.co/{:08x}", rng.gen::<u32>());
        }
        let secs = rng.gen_range(0..86_400u32);
        out.push(RawTweet {
            id: format!("12500000{i:04}"),
            created_at: format!("{date}T{:02}:{:02}:{:02}Z", secs / 3600, secs / 60 % 60, secs % 60),
            agency: agency.to_string(),
            text,
        });
    }
    out
}

/// Daily `(date, new_cases, new_deaths)`; a skewed bell with deterministic
/// jitter, the unique maximum on the peak day.
pub fn indicators() -> Vec<(NaiveDate, u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let window = DateRange::first_wave();
    let peak = window.index_of(peak_day()).expect("peak inside window") as f64;
    let mut rows = Vec::new();
    for (i, date) in window.days().enumerate() {
        let t = i as f64;
        let width = if t < peak { 18.0 } else { 40.0 };
        let shape = (-((t - peak) / width).powi(2)).exp();
        let jitter = rng.gen_range(0.94..1.0);
        let value = |peak_value: u64| -> u64 {
            if date == peak_day() {
                peak_value
            } else {
                ((peak_value as f64 * shape * jitter).round() as u64).min(peak_value - 1)
            }
        };
        let (cases, deaths) = (value(PEAK_CASES), value(PEAK_DEATHS));
        if date != missing_indicator_day() {
            rows.push((date, cases, deaths));
        }
    }
    rows
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(CliError::io(path))
}

/// Writes `tweets.jsonl`, `indicators.csv` and `run.cfg` into `dir`.
pub fn write_fixture(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let mut jsonl = Vec::new();
    for t in tweets() {
        serde_json::to_writer(&mut jsonl, &t).map_err(|e| CliError::format(dir, e))?;
        jsonl.push(b'\n');
    }
    write(&dir.join("tweets.jsonl"), &jsonl)?;
    let mut csv = String::from("date,new_cases,new_deaths\n");
    for (d, c, x) in indicators() {
        let _ = writeln!(csv, "{d},{c},{x}");
    }
    write(&dir.join("indicators.csv"), csv.as_bytes())?;
    write(&dir.join("run.cfg"), CONFIG.as_bytes())
}
