//! Algorithmic core for crisis-communication timelines: corpus validation,
//! bag-of-words preprocessing, collapsed-Gibbs LDA, a dynamic topic model
//! smoothed with per-coordinate Kalman chains, lexicon sentiment series, and
//! period-segmented alignment against outbreak indicators.
//!
//! The crate is `no_std` and needs only `alloc`; file formats and the command
//! line live in the `crisiscomm` crate.
#![no_std]

extern crate alloc;

pub mod calendar;
pub mod corpus;
pub mod preprocess;
pub mod lda;
pub mod synthetic;
pub mod assignment;
pub mod dtm;
pub mod sentiment;
pub mod chronology;
