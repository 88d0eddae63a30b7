//! Report files: the aligned daily table, a TOML summary, and optional SVG
//! line charts. Output bytes depend only on the report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crisiscomm_core::chronology::{AlignedReport, FrequencyMode};
use crisiscomm_core::sentiment::to_f64;
use serde::Serialize;

use crate::error::{CliError, Result};

pub const TABLE_FILE: &str = "aligned.csv";
pub const SUMMARY_FILE: &str = "summary.toml";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub table: PathBuf,
    pub summary: PathBuf,
    pub charts: Vec<PathBuf>,
}

fn cell_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn cell_topic(v: Option<f64>, mode: FrequencyMode) -> String {
    match (v, mode) {
        (None, _) => String::new(),
        (Some(x), FrequencyMode::Hard) => format!("{x:.0}"),
        (Some(x), FrequencyMode::Soft) => format!("{x:.6}"),
    }
}

/// `date,period,topic_<k>...,sentiment_raw,sentiment_rolling,new_cases,new_deaths`;
/// undefined cells are empty.
pub fn aligned_table(report: &AlignedReport, mode: FrequencyMode) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["date".to_string(), "period".to_string()];
    header.extend((0..report.topic_labels.len()).map(|k| format!("topic_{k}")));
    header.extend(["sentiment_raw", "sentiment_rolling", "new_cases", "new_deaths"].map(String::from));
    let to_err = |e: csv::Error| CliError::format(TABLE_FILE, e);
    w.write_record(&header).map_err(to_err)?;
    let periods = report.segmentation.periods();
    for row in &report.rows {
        let mut rec = vec![row.date.to_string(), periods[row.period].id.clone()];
        rec.extend(row.topics.iter().map(|&v| cell_topic(v, mode)));
        rec.push(cell_f64(row.sentiment_raw.as_ref().map(to_f64)));
        rec.push(cell_f64(row.sentiment_rolling.as_ref().map(to_f64)));
        rec.push(row.new_cases.map(|v| v.to_string()).unwrap_or_default());
        rec.push(row.new_deaths.map(|v| v.to_string()).unwrap_or_default());
        w.write_record(&rec).map_err(to_err)?;
    }
    w.into_inner().map_err(|e| CliError::format(TABLE_FILE, e.error()))
}

#[derive(Serialize)]
struct Summary {
    window_start: String,
    window_end: String,
    days: usize,
    rolling_window: usize,
    topics: Vec<TopicEntry>,
    periods: Vec<PeriodEntry>,
    agencies: BTreeMap<String, Vec<AgencyPeriod>>,
}

#[derive(Serialize)]
struct TopicEntry {
    id: usize,
    label: String,
}

#[derive(Serialize)]
struct PeriodEntry {
    id: String,
    name: String,
    start: String,
    end: String,
    days: usize,
    tweets: usize,
    /// Exact `numerator/denominator`.
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_sentiment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_sentiment_approx: Option<f64>,
    total_cases: u64,
    total_deaths: u64,
    top_words: Vec<String>,
    top_word_tweets: Vec<u32>,
}

#[derive(Serialize)]
struct AgencyPeriod {
    period: String,
    top_words: Vec<String>,
}

pub fn summary_toml(report: &AlignedReport) -> Result<String> {
    let periods = report.segmentation.periods();
    let window = report.window();
    let summary = Summary {
        window_start: window.start.to_string(),
        window_end: window.end.to_string(),
        days: window.len(),
        rolling_window: report.rolling_window,
        topics: report
            .topic_labels
            .iter()
            .enumerate()
            .map(|(id, label)| TopicEntry { id, label: label.clone() })
            .collect(),
        periods: report
            .periods
            .iter()
            .map(|s| {
                let p = &periods[s.period];
                PeriodEntry {
                    id: p.id.clone(),
                    name: p.name.clone(),
                    start: p.range.start.to_string(),
                    end: p.range.end.to_string(),
                    days: s.days,
                    tweets: s.tweets,
                    mean_sentiment: s.mean_sentiment.as_ref().map(ToString::to_string),
                    mean_sentiment_approx: s.mean_sentiment.as_ref().map(to_f64),
                    total_cases: s.total_cases,
                    total_deaths: s.total_deaths,
                    top_words: s.top_words.iter().map(|(w, _)| w.clone()).collect(),
                    top_word_tweets: s.top_words.iter().map(|(_, c)| *c).collect(),
                }
            })
            .collect(),
        agencies: report
            .agency_top_words
            .iter()
            .map(|(a, tables)| {
                let rows = tables
                    .iter()
                    .zip(periods)
                    .map(|(t, p)| AgencyPeriod {
                        period: p.id.clone(),
                        top_words: t.iter().map(|(w, _)| w.clone()).collect(),
                    })
                    .collect();
                (a.clone(), rows)
            })
            .collect(),
    };
    toml::to_string(&summary).map_err(|e| CliError::format(SUMMARY_FILE, e))
}

const PALETTE: &[&str] = &[
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// A standalone SVG with one polyline per series, broken at undefined days.
pub fn line_chart(title: &str, series: &[(String, Vec<Option<f64>>)]) -> String {
    let (w, h, left, right, top, bottom) = (900.0, 360.0, 60.0, 200.0, 40.0, 30.0);
    let n = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let defined = series.iter().flat_map(|(_, v)| v.iter().flatten().copied());
    let (mut lo, mut hi) = defined.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    } else if hi - lo < 1e-12 {
        (lo, hi) = (lo - 1.0, hi + 1.0);
    }
    let x = |i: usize| left + (w - left - right) * if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
    let y = |v: f64| top + (h - top - bottom) * (1.0 - (v - lo) / (hi - lo));

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{left}" y="24" font-family="sans-serif" font-size="16">{}</text>"#, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{:.2}" height="{:.2}" fill="none" stroke="gray"/>"#,
        w - left - right,
        h - top - bottom
    );
    for v in [lo, hi] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            left - 6.0,
            y(v) + 4.0,
            format_tick(v)
        );
    }
    for (i, (name, values)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut run: Vec<String> = Vec::new();
        let flush = |run: &mut Vec<String>, s: &mut String| {
            if !run.is_empty() {
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    run.join(" ")
                );
                run.clear();
            }
        };
        for (d, v) in values.iter().enumerate() {
            match v {
                Some(v) => run.push(format!("{:.2},{:.2}", x(d), y(*v))),
                None => flush(&mut run, &mut s),
            }
        }
        flush(&mut run, &mut s);
        let ly = top + 16.0 * i as f64 + 8.0;
        let lx = w - right + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/>"#, lx + 16.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            lx + 22.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn format_tick(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e12 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn charts(report: &AlignedReport) -> Vec<(&'static str, String)> {
    let rows = &report.rows;
    let topics: Vec<(String, Vec<Option<f64>>)> = report
        .topic_labels
        .iter()
        .enumerate()
        .map(|(k, label)| (format!("{k}: {label}"), rows.iter().map(|r| r.topics[k]).collect()))
        .collect();
    let sentiment = vec![
        ("daily".to_string(), rows.iter().map(|r| r.sentiment_raw.as_ref().map(to_f64)).collect()),
        (
            format!("{}-day rolling", report.rolling_window),
            rows.iter().map(|r| r.sentiment_rolling.as_ref().map(to_f64)).collect(),
        ),
    ];
    let cases = vec![("new cases".to_string(), rows.iter().map(|r| r.new_cases.map(|v| v as f64)).collect())];
    let deaths = vec![("new deaths".to_string(), rows.iter().map(|r| r.new_deaths.map(|v| v as f64)).collect())];
    vec![
        ("topic_frequency.svg", line_chart("Topic frequency", &topics)),
        ("sentiment.svg", line_chart("Sentiment", &sentiment)),
        ("new_cases.svg", line_chart("Daily new cases", &cases)),
        ("new_deaths.svg", line_chart("Daily new deaths", &deaths)),
    ]
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(CliError::io(path))
}

pub fn emit_report(report: &AlignedReport, mode: FrequencyMode, dir: &Path, with_charts: bool) -> Result<ReportFiles> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let table = dir.join(TABLE_FILE);
    write(&table, &aligned_table(report, mode)?)?;
    let summary = dir.join(SUMMARY_FILE);
    write(&summary, summary_toml(report)?.as_bytes())?;
    let mut files = ReportFiles { table, summary, charts: Vec::new() };
    if with_charts {
        for (name, svg) in charts(report) {
            let path = dir.join(name);
            write(&path, svg.as_bytes())?;
            files.charts.push(path);
        }
    }
    Ok(files)
}
