//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always print.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use crisiscomm_core::chronology::default_segmentation;
use crisiscomm_core::corpus::{ingest_tweets, IngestOptions, RawTweet};
use crisiscomm_core::dtm::{fit_dtm, mean_to_natural, natural_to_mean, smooth_chain, ChainObservation, DtmConfig, SliceObservation};
use crisiscomm_core::lda::{fit_documents, select_k, CoherenceScope, Init, LdaConfig, LdaSettings};
use crisiscomm_core::preprocess::{Stoplist, Tokenizer};
use crisiscomm_core::sentiment::{daily_sentiment, rolling_mean, SentimentLexicon, SentimentScorer};
use crisiscomm_core::synthetic::{disjoint_topics, drift_corpus, single_topic_corpus};
use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// Chain posterior from the dense tridiagonal precision matrix.
fn dense_posterior(obs: &[Option<(f64, f64)>], sigma2: f64, m0: f64, p0: f64) -> (Vec<f64>, Vec<f64>) {
    let n = obs.len();
    let mut q = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    q[(0, 0)] += 1.0 / p0;
    b[0] += m0 / p0;
    for t in 1..n {
        q[(t, t)] += 1.0 / sigma2;
        q[(t - 1, t - 1)] += 1.0 / sigma2;
        q[(t, t - 1)] -= 1.0 / sigma2;
        q[(t - 1, t)] -= 1.0 / sigma2;
    }
    for (t, o) in obs.iter().enumerate() {
        if let Some((y, v)) = o {
            q[(t, t)] += 1.0 / v;
            b[t] += y / v;
        }
    }
    let cov = q.try_inverse().expect("positive definite");
    let mean = &cov * b;
    (mean.iter().copied().collect(), (0..n).map(|i| cov[(i, i)]).collect())
}

fn kalman_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let t = rng.gen_range(1..=6);
        let v = rng.gen_range(2..=5);
        let sigma2 = rng.gen_range(0.001..2.0);
        let (m0, p0) = (rng.gen_range(-2.0..2.0), rng.gen_range(0.05..20.0));
        let slices: Vec<SliceObservation> = (0..t)
            .map(|s| {
                let mut values: Vec<f64> = (0..v).map(|_| rng.gen_range(-5.0..5.0)).collect();
                values[v - 1] = 0.0;
                SliceObservation {
                    observed: s == 0 || rng.gen_bool(0.8),
                    values,
                    variances: (0..v).map(|_| rng.gen_range(0.01..3.0)).collect(),
                }
            })
            .collect();
        let smoothed = smooth_chain(&ChainObservation { dim: v, slices: slices.clone() }, sigma2, m0, p0);
        for coord in 0..v - 1 {
            let obs: Vec<_> = slices.iter().map(|s| s.observed.then(|| (s.values[coord], s.variances[coord]))).collect();
            let (mean, var) = dense_posterior(&obs, sigma2, m0, p0);
            for s in 0..t {
                worst = worst
                    .max((smoothed[s].0.as_slice()[coord] - mean[s]).abs())
                    .max((smoothed[s].1[coord] - var[s]).abs());
            }
        }
        for (beta, var) in &smoothed {
            ensure(beta.as_slice()[v - 1] == 0.0 && var[v - 1] == 0.0, "gauge coordinate moved")?;
        }
    }
    ensure(worst < 1e-8, format!("max deviation {worst:e}"))?;
    within(started.elapsed(), Duration::from_secs(5))?;
    Ok(format!("100 chains, max deviation {worst:.1e}, {:.2?}", started.elapsed()))
}

fn logistic_round_trip() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let v = rng.gen_range(2..=20);
        let raw: Vec<f64> = (0..v).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-6).collect();
        let sum: f64 = raw.iter().sum();
        let pi: Vec<f64> = raw.iter().map(|x| x / sum).collect();
        let beta = mean_to_natural(&pi, 0.0).map_err(|e| e.to_string())?;
        ensure(beta.as_slice()[v - 1] == 0.0, "gauge violated")?;
        let back = natural_to_mean(&beta);
        for (a, b) in pi.iter().zip(&back) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst < 1e-10, format!("max deviation {worst:e}"))?;
    within(started.elapsed(), Duration::from_secs(1))?;
    Ok(format!("1000 points, max deviation {worst:.1e}, {:.2?}", started.elapsed()))
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Greedy one-to-one matching; cosine per planted topic.
fn greedy_cosines(planted: &[Vec<f64>], learned: &[Vec<f64>]) -> Vec<f64> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (p, prow) in planted.iter().enumerate() {
        for (l, lrow) in learned.iter().enumerate() {
            pairs.push((cosine(prow, lrow), p, l));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out = vec![f64::NAN; planted.len()];
    let mut used = vec![false; learned.len()];
    for (c, p, l) in pairs {
        if out[p].is_nan() && !used[l] {
            out[p] = c;
            used[l] = true;
        }
    }
    out
}

fn lda_recovery() -> Outcome {
    let started = Instant::now();
    let planted = disjoint_topics(2, 10);
    let start = date(2020, 2, 21);
    let mut successes = 0;
    let mut mins = Vec::new();
    for seed in 0..5u64 {
        let corpus = single_topic_corpus(&planted, 200, 20, 10, start, 100 + seed);
        let cfg = LdaConfig { k: 2, alpha: 0.1, eta: 0.01, iterations: 1000, burn_in: 500, seed };
        let mut conserved = true;
        let model = fit_documents(corpus.bow.docs(), corpus.bow.vocab().len(), &cfg, Init::Uniform, |g| {
            let v = g.vocab_size;
            for (d, row) in g.doc_topic.iter().enumerate() {
                conserved &= row.iter().sum::<u32>() as usize == g.tokens[d].len();
            }
            for t in 0..g.topic_totals.len() {
                let words: u32 = g.topic_word[t * v..(t + 1) * v].iter().sum();
                let docs: u32 = g.doc_topic.iter().map(|r| r[t]).sum();
                conserved &= words == g.topic_totals[t] && docs == g.topic_totals[t];
            }
        })
        .map_err(|e| e.to_string())?;
        ensure(conserved, format!("count conservation broken, seed {seed}"))?;
        let c = greedy_cosines(&planted, &model.phi);
        let min = c.iter().copied().fold(f64::INFINITY, f64::min);
        mins.push(format!("{min:.3}"));
        if min >= 0.9 {
            successes += 1;
        }
    }
    ensure(successes >= 4, format!("{successes}/5 seeds recovered (min cosines {mins:?})"))?;
    within(started.elapsed(), Duration::from_secs(30))?;
    Ok(format!("{successes}/5 seeds, min cosines {mins:?}, {:.2?}", started.elapsed()))
}

fn k_selection() -> Outcome {
    let planted = disjoint_topics(3, 10);
    let start = date(2020, 2, 21);
    let settings = |seed| LdaSettings { alpha: Some(0.1), eta: 0.01, iterations: 400, burn_in: 200, seed };
    let mut picks = Vec::new();
    for seed in 0..5u64 {
        let corpus = single_topic_corpus(&planted, 150, 30, 10, start, 200 + seed);
        let sel = select_k(&corpus.bow, &[2, 3, 5, 8], &settings(seed), CoherenceScope::Document).map_err(|e| e.to_string())?;
        let again = select_k(&corpus.bow, &[2, 3, 5, 8], &settings(seed), CoherenceScope::Document).map_err(|e| e.to_string())?;
        ensure(again.report == sel.report && again.model == sel.model, format!("seed {seed} not deterministic"))?;
        picks.push(sel.report.selected);
    }
    let hits = picks.iter().filter(|&&k| k == 3).count();
    ensure(hits >= 4, format!("selected {picks:?}"))?;
    Ok(format!("selected {picks:?}, reruns identical"))
}

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for k in i..=j {
                r[idx[k]] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn dtm_drift() -> Outcome {
    let c = drift_corpus(6, 10, 100, 20, (0.05, 0.45), date(2020, 3, 1), 17);
    let cfg = |sigma2| DtmConfig {
        sigma2,
        lda: LdaSettings { alpha: Some(0.1), eta: 0.01, iterations: 300, burn_in: 150, seed: 3 },
        ..DtmConfig::new(2)
    };
    let model = fit_dtm(&c.bow, &cfg(0.005)).map_err(|e| e.to_string())?;
    let k = if model.topic_means(0)[0][0] > model.topic_means(0)[1][0] { 0 } else { 1 };
    let w = c.drift_word as usize;
    let probs: Vec<f64> = (0..6).map(|t| model.topic_means(t)[k][w]).collect();
    let rho = spearman(&(0..6).map(|t| t as f64).collect::<Vec<_>>(), &probs);
    ensure(rho >= 0.8, format!("spearman {rho:.3}"))?;

    let frozen = fit_dtm(&c.bow, &cfg(1e-12)).map_err(|e| e.to_string())?;
    let mut spread: f64 = 0.0;
    for k in 0..2 {
        let first = frozen.topics[0][k].as_slice();
        for t in 1..frozen.num_slices() {
            for (a, b) in frozen.topics[t][k].as_slice().iter().zip(first) {
                spread = spread.max((a - b).abs());
            }
        }
    }
    ensure(spread < 1e-6, format!("collapsed slices differ by {spread:e}"))?;
    Ok(format!("spearman {rho:.3}, collapse spread {spread:.1e}"))
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Per-tweet token-mean over whitespace words, then daily and windowed
/// averages, all recomputed from scratch.
fn sentiment_oracle(tweets: &[(usize, String)], days: usize, lex: &BTreeMap<&str, i64>, window: usize) -> (Vec<Option<BigRational>>, Vec<Option<BigRational>>) {
    let mut per_day: Vec<Vec<BigRational>> = vec![Vec::new(); days];
    for (d, text) in tweets {
        let vals: Vec<i64> = text.split_whitespace().filter_map(|w| lex.get(w).copied()).collect();
        let score = if vals.is_empty() { q(0, 1) } else { q(vals.iter().sum(), 5 * vals.len() as i64) };
        per_day[*d].push(score);
    }
    let mean = |xs: &[&BigRational]| -> Option<BigRational> {
        if xs.is_empty() {
            return None;
        }
        let mut s = q(0, 1);
        for x in xs {
            s += *x;
        }
        Some(s / q(xs.len() as i64, 1))
    };
    let daily: Vec<Option<BigRational>> = per_day.iter().map(|v| mean(&v.iter().collect::<Vec<_>>())).collect();
    let rolling = (0..days)
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            mean(&daily[lo..=i].iter().flatten().collect::<Vec<_>>())
        })
        .collect();
    (daily, rolling)
}

fn sentiment_exact() -> Outcome {
    let lex_pairs = [("good", 5), ("bad", -5), ("fine", 2), ("poor", -3), ("calm", 1)];
    let lex: BTreeMap<&str, i64> = lex_pairs.iter().copied().collect();
    let lexicon: SentimentLexicon = lex_pairs.iter().map(|&(w, v)| (w.to_string(), v)).collect();
    let scorer = SentimentScorer::new(lexicon, Tokenizer::new(Stoplist::default()));
    let vocab = ["good", "bad", "fine", "poor", "calm", "xyz", "update"];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checks = 0;
    for round in 0..20 {
        let days = rng.gen_range(3..20);
        let mut tweets = vec![(0usize, "good".to_string()), (days - 1, "bad".to_string())];
        for _ in 0..rng.gen_range(0..40) {
            let d = rng.gen_range(0..days);
            // Leave some days empty.
            if d % 4 == 2 {
                continue;
            }
            let text: Vec<&str> = (0..rng.gen_range(1..6)).map(|_| vocab[rng.gen_range(0..vocab.len())]).collect();
            tweets.push((d, text.join(" ")));
        }
        let start = date(2020, 2, 21);
        let lines = tweets.iter().enumerate().map(|(i, (d, text))| {
            let ts = start + chrono::Days::new(*d as u64);
            (i + 1, Ok(RawTweet { id: format!("{round}-{i}"), created_at: format!("{ts}T12:00:00Z"), agency: "X".into(), text: text.clone() }))
        });
        let (corpus, _) = ingest_tweets(lines, &IngestOptions::default()).map_err(|e| e.to_string())?;
        let series = daily_sentiment(&corpus, &scorer);
        ensure(series.len() == days, "series does not span the corpus")?;
        for window in 1..=8 {
            let (daily, rolling) = sentiment_oracle(&tweets, days, &lex, window);
            let got_daily: Vec<_> = series.days().iter().map(|d| d.mean.clone()).collect();
            ensure(got_daily == daily, format!("daily means differ (round {round})"))?;
            let rolled = rolling_mean(&series, window).map_err(|e| e.to_string())?;
            let got: Vec<_> = rolled.days().iter().map(|d| d.mean.clone()).collect();
            ensure(got == rolling, format!("rolling means differ (round {round}, window {window})"))?;
            if window == 1 {
                ensure(got == got_daily, "window 1 is not the identity")?;
            }
            checks += 1;
        }
    }
    Ok(format!("{checks} exact series comparisons"))
}

fn segmentation() -> Outcome {
    let seg = default_segmentation();
    let cases = [
        (date(2020, 2, 21), "P1"),
        (date(2020, 3, 19), "P1"),
        (date(2020, 3, 20), "P2"),
        (date(2020, 4, 10), "P2"),
        (date(2020, 4, 11), "P3"),
        (date(2020, 5, 10), "P3"),
        (date(2020, 5, 11), "P4"),
        (date(2020, 6, 6), "P4"),
    ];
    for (d, want) in cases {
        let got = seg.assign(d).map_err(|e| e.to_string())?;
        ensure(got.id == want, format!("{d} -> {} (want {want})", got.id))?;
    }
    ensure(seg.assign(date(2020, 1, 1)).is_err(), "2020-01-01 accepted")?;
    ensure(seg.assign(date(2020, 6, 7)).is_err(), "2020-06-07 accepted")?;
    let window: Vec<NaiveDate> = date(2020, 2, 21).iter_days().take_while(|d| *d <= date(2020, 6, 6)).collect();
    ensure(window.len() == 107, format!("window has {} days", window.len()))?;
    for d in &window {
        let n = seg.periods().iter().filter(|p| p.range.contains(*d)).count();
        ensure(n == 1, format!("{d} falls in {n} periods"))?;
    }
    Ok("8 boundaries match, 107 days each in exactly one period".into())
}

fn files_under(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn end_to_end() -> Outcome {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic/run.cfg");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    let mut times = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let started = Instant::now();
        let status = Command::new(env!("CARGO_BIN_EXE_crisiscomm"))
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--seed", "7", "report", "--all"])
            .output()
            .map_err(|e| e.to_string())?;
        let elapsed = started.elapsed();
        ensure(status.status.code() == Some(0), format!("exit {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)))?;
        within(elapsed, Duration::from_secs(60))?;
        times.push(format!("{elapsed:.2?}"));
        outputs.push(files_under(&out));
    }
    ensure(outputs[0] == outputs[1], "outputs differ between runs")?;
    let table = String::from_utf8(outputs[0]["report/aligned.csv"].clone()).map_err(|e| e.to_string())?;
    let mut reader = csv::Reader::from_reader(table.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| header.iter().position(|h| h == name).ok_or(format!("no column {name}"));
    let (c_date, c_period, c_cases, c_deaths) = (col("date")?, col("period")?, col("new_cases")?, col("new_deaths")?);
    let rows: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    ensure(rows.len() == 107, format!("{} rows", rows.len()))?;
    for (i, (row, d)) in rows.iter().zip(date(2020, 2, 21).iter_days()).enumerate() {
        ensure(row[c_date] == d.to_string(), format!("row {i} dated {}", &row[c_date]))?;
    }
    let peak = rows.iter().find(|r| &r[c_date] == "2020-04-10").ok_or("no 2020-04-10 row")?;
    ensure(
        &peak[c_period] == "P2" && &peak[c_cases] == "40000" && &peak[c_deaths] == "2500",
        format!("2020-04-10 row: {} {} {}", &peak[c_period], &peak[c_cases], &peak[c_deaths]),
    )?;
    Ok(format!("{} files identical, 107 rows, peak on P2, runs {times:?}", outputs[0].len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("Kalman smoother matches dense posterior", kalman_oracle),
        ("logistic-normal round trip", logistic_round_trip),
        ("LDA planted-topic recovery", lda_recovery),
        ("K selection", k_selection),
        ("DTM drift recovery and collapse", dtm_drift),
        ("sentiment exact oracle equivalence", sentiment_exact),
        ("period segmentation constants", segmentation),
        ("end-to-end determinism", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
