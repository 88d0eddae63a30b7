//! Calendar helpers shared by every daily-indexed series.

use alloc::vec::Vec;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

/// Inclusive range of UTC calendar dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    /// Returns `None` when `start > end`.
    pub fn new(start: NaiveDate, end: NaiveDate) -> Option<Self> {
        (start <= end).then_some(Self { start, end })
    }

    /// 2020-02-21 through 2020-06-06, the collection window of the agency archives.
    pub fn first_wave() -> Self {
        Self {
            start: ymd(2020, 2, 21),
            end: ymd(2020, 6, 6),
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    /// Number of days, both ends included.
    pub fn len(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Offset of `date` from the start, if inside the range.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.contains(date)
            .then(|| (date - self.start).num_days() as usize)
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start + chrono::Days::new(index as u64)
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.start.iter_days().take(self.len())
    }

    pub fn intersect(&self, other: &DateRange) -> Option<DateRange> {
        DateRange::new(self.start.max(other.start), self.end.min(other.end))
    }
}

pub(crate) fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid literal date")
}

/// Parses an ISO-8601 timestamp. Offsets are converted to UTC; timestamps
/// without an offset are taken as UTC; a bare date means midnight UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f%z", "%Y-%m-%d %H:%M:%S%.f%z"] {
        if let Ok(dt) = DateTime::parse_from_str(s, fmt) {
            return Some(dt.with_timezone(&Utc));
        }
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(naive.and_utc());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
}

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

/// Groups an ascending date sequence into one bucket per calendar day of the
/// covered span. Empty days get empty buckets.
pub(crate) fn bucket_by_day<I>(dates: I) -> Vec<(NaiveDate, Vec<usize>)>
where
    I: IntoIterator<Item = NaiveDate>,
{
    let dates: Vec<NaiveDate> = dates.into_iter().collect();
    let (Some(&first), Some(&last)) = (dates.first(), dates.last()) else {
        return Vec::new();
    };
    let range = DateRange::new(first, last).expect("dates are sorted");
    let mut buckets: Vec<(NaiveDate, Vec<usize>)> =
        range.days().map(|d| (d, Vec::new())).collect();
    for (i, date) in dates.into_iter().enumerate() {
        let slot = range.index_of(date).expect("dates are sorted");
        buckets[slot].1.push(i);
    }
    buckets
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_wave_is_107_days() {
        let w = DateRange::first_wave();
        assert_eq!(w.len(), 107);
        assert_eq!(w.days().count(), 107);
        assert_eq!(w.date_at(106), ymd(2020, 6, 6));
    }

    #[test]
    fn timestamps_normalise_to_utc() {
        let a = parse_timestamp("2020-02-21T23:30:00-02:00").unwrap();
        assert_eq!(a.date_naive(), ymd(2020, 2, 22));
        let b = parse_timestamp("2020-02-21 10:00:00").unwrap();
        assert_eq!(b.date_naive(), ymd(2020, 2, 21));
        assert!(parse_timestamp("2020-02-21").is_some());
        assert!(parse_timestamp("not-a-date").is_none());
    }

    #[test]
    fn buckets_cover_gaps() {
        let b = bucket_by_day([ymd(2020, 2, 21), ymd(2020, 2, 21), ymd(2020, 2, 23)]);
        assert_eq!(b.len(), 3);
        assert_eq!(b[0].1, [0, 1]);
        assert!(b[1].1.is_empty());
        assert_eq!(b[2].1, [2]);
    }
}
