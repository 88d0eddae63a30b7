//! Daily and rolling sentiment against a brute-force windowed average.

use chrono::NaiveDate;
use crisiscomm_core::sentiment::{
    rolling_mean, score_text, DaySentiment, SentimentLexicon, SentimentSeries,
};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn day(i: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 2, 21).unwrap() + chrono::Days::new(i as u64)
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Scores per day as fifths in [-5, 5]; empty vectors are empty days.
fn scores_strategy() -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-5i64..=5, 0..4), 1..15)
        .prop_filter("first day populated", |d| !d[0].is_empty() && !d[d.len() - 1].is_empty())
}

fn series_of(days: &[Vec<i64>], shift: &BigRational) -> SentimentSeries {
    let pairs = days
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.iter().map(move |&v| (day(i), q(v, 5) + shift)));
    SentimentSeries::from_scores(pairs.collect::<Vec<_>>()).unwrap()
}

/// Windowed mean computed from scratch for every day.
fn brute_force(days: &[Vec<i64>], window: usize) -> Vec<Option<BigRational>> {
    let daily: Vec<Option<BigRational>> = days
        .iter()
        .map(|s| {
            if s.is_empty() {
                None
            } else {
                let sum: i64 = s.iter().sum();
                Some(q(sum, 5 * s.len() as i64))
            }
        })
        .collect();
    (0..days.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let defined: Vec<&BigRational> = daily[lo..=i].iter().flatten().collect();
            if defined.is_empty() {
                return None;
            }
            let mut sum = BigRational::zero();
            for v in &defined {
                sum += *v;
            }
            Some(sum / BigRational::from_integer((defined.len() as i64).into()))
        })
        .collect()
}

fn means(s: &SentimentSeries) -> Vec<Option<BigRational>> {
    s.days().iter().map(|d| d.mean.clone()).collect()
}

proptest! {
    #[test]
    fn rolling_matches_brute_force(days in scores_strategy(), window in 1usize..8) {
        let s = series_of(&days, &BigRational::zero());
        prop_assert_eq!(means(&s), brute_force(&days, 1));
        prop_assert_eq!(means(&rolling_mean(&s, window).unwrap()), brute_force(&days, window));
        prop_assert_eq!(means(&rolling_mean(&s, 1).unwrap()), means(&s));
    }

    #[test]
    fn shift_equivariance(days in scores_strategy(), window in 1usize..8, c in -3i64..=3) {
        let c = q(c, 10);
        let base = series_of(&days, &BigRational::zero());
        let shifted = series_of(&days, &c);
        let expect = |s: &SentimentSeries| -> Vec<Option<BigRational>> {
            means(s).into_iter().map(|m| m.map(|v| v + &c)).collect()
        };
        prop_assert_eq!(means(&shifted), expect(&base));
        prop_assert_eq!(means(&rolling_mean(&shifted, window).unwrap()), expect(&rolling_mean(&base, window).unwrap()));
    }

    #[test]
    fn constant_series_is_fixed(len in 1usize..20, v in -5i64..=5, window in 1usize..10) {
        let range = crisiscomm_core::calendar::DateRange::new(day(0), day(len - 1)).unwrap();
        let s = SentimentSeries::new(range, vec![DaySentiment { mean: Some(q(v, 5)), count: 1 }; len]);
        prop_assert_eq!(means(&rolling_mean(&s, window).unwrap()), means(&s));
    }

    #[test]
    fn scores_are_bounded(words in prop::collection::vec(("[a-e]{3}", -5i64..=5), 0..10),
                          text in prop::collection::vec("[a-e]{3}", 0..12)) {
        let lex: SentimentLexicon = words.into_iter().collect();
        let s = score_text(&text.join(" "), &lex);
        prop_assert!(s >= -BigRational::one() && s <= BigRational::one());
    }
}

#[test]
fn bundled_lexicon_scores_crisis_language() {
    let lex = SentimentLexicon::bundled();
    assert!(score_text("Hospitals face a shortage and panic spreads", &lex) < BigRational::zero());
    assert!(score_text("Thank you for the help, stay safe", &lex) > BigRational::zero());
}
