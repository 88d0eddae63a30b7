//! Input and corpus file formats: JSONL tweet archives, indicator CSV,
//! lexicon and stoplist files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crisiscomm_core::calendar::parse_date;
use crisiscomm_core::corpus::{
    ingest_tweets, Corpus, IndicatorRow, IndicatorSeries, IngestOptions, IngestReport, RawTweet,
};
use crisiscomm_core::preprocess::Stoplist;
use crisiscomm_core::sentiment::SentimentLexicon;
use serde::Deserialize;

use crate::error::{CliError, Result};

/// Decodes one JSON object per line; blank lines are skipped. Line numbers are 1-based.
pub fn read_tweet_lines<R: BufRead>(reader: R) -> std::io::Result<Vec<(usize, Result<RawTweet, String>)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push((i + 1, serde_json::from_str::<RawTweet>(&line).map_err(|e| e.to_string())));
    }
    Ok(out)
}

pub fn read_tweets(path: &Path, opts: &IngestOptions) -> Result<(Corpus, IngestReport)> {
    let file = File::open(path).map_err(CliError::io(path))?;
    let lines = read_tweet_lines(BufReader::new(file)).map_err(CliError::io(path))?;
    Ok(ingest_tweets(lines, opts)?)
}

/// One record per line in timestamp order, timestamps normalised to UTC.
pub fn write_tweets<W: Write>(corpus: &Corpus, mut w: W) -> std::io::Result<()> {
    for rec in corpus.records() {
        serde_json::to_writer(&mut w, &rec.to_raw())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_tweets_file(corpus: &Corpus, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(CliError::io(path))?;
    let mut w = BufWriter::new(file);
    write_tweets(corpus, &mut w).and_then(|_| w.flush()).map_err(CliError::io(path))
}

#[derive(Debug, Deserialize)]
struct IndicatorCsvRow {
    date: String,
    new_cases: i64,
    new_deaths: i64,
}

/// `date,new_cases,new_deaths` with a header row.
pub fn read_indicators(path: &Path) -> Result<IndicatorSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::format(path, e))?;
    let headers = reader.headers().map_err(|e| CliError::format(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["date", "new_cases", "new_deaths"] {
        return Err(CliError::format(path, "expected header `date,new_cases,new_deaths`"));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize::<IndicatorCsvRow>().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| CliError::format(path, format!("line {line}: {e}")))?;
        let date = parse_date(&rec.date)
            .ok_or_else(|| CliError::format(path, format!("line {line}: bad date `{}`", rec.date)))?;
        rows.push(IndicatorRow { line, date, new_cases: rec.new_cases, new_deaths: rec.new_deaths });
    }
    Ok(IndicatorSeries::from_rows(rows)?)
}

pub fn read_lexicon(path: Option<&Path>) -> Result<SentimentLexicon> {
    match path {
        None => Ok(SentimentLexicon::bundled()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(CliError::io(p))?;
            SentimentLexicon::parse(&text).map_err(|e| CliError::format(p, e))
        }
    }
}

pub fn read_stoplist(path: Option<&Path>) -> Result<Stoplist> {
    match path {
        None => Ok(Stoplist::bundled()),
        Some(p) => Ok(Stoplist::parse(&std::fs::read_to_string(p).map_err(CliError::io(p))?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lenient_line_reading() {
        let text = "{\"id\":\"1\",\"created_at\":\"2020-03-01T10:00:00Z\",\"agency\":\"WHO\",\"text\":\"masks\"}\n\nnot json\n";
        let lines = read_tweet_lines(text.as_bytes()).unwrap();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].1.is_ok());
        assert_eq!(lines[1].0, 3);
        assert!(lines[1].1.is_err());
    }

    #[test]
    fn indicator_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("i.csv");
        std::fs::write(&p, "date,new_cases,new_deaths\n2020-04-09,33000,1900\n2020-04-10,40000,2500\n").unwrap();
        let s = read_indicators(&p).unwrap();
        let d = s.get(parse_date("2020-04-10").unwrap()).unwrap();
        assert_eq!((d.new_cases, d.new_deaths), (40000, 2500));
        std::fs::write(&p, "day,cases,deaths\n").unwrap();
        assert!(matches!(read_indicators(&p), Err(CliError::Format { .. })));
        std::fs::write(&p, "date,new_cases,new_deaths\n2020-04-09,-1,0\n").unwrap();
        assert!(matches!(read_indicators(&p), Err(CliError::Indicator(_))));
    }
}
