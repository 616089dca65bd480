//! Configuration-based analysis of powered-two-wheeler crash cases.
//!
//! The pipeline reads in-depth crash records, selects the study population,
//! groups cases into trajectory-based crash configurations, tabulates
//! frequencies, contributing factors, evasive responses and speed/time
//! summaries, and maps each configuration profile onto rider skill targets.
//! A seeded synthetic-data generator reproduces published marginal tables so
//! the whole pipeline can be checked end to end.

mod token;

pub mod classify;
pub mod ingest;
pub mod model;
pub mod report;
pub mod skills;
pub mod stats;
pub mod synth;

pub use token::UnknownToken;
