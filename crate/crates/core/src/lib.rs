//! Catastrophic health expenditure (CHE) and out-of-pocket inequality
//! analysis for two-agency complex-survey microdata.
//!
//! The flow is: load and validate household/episode CSVs
//! ([`data_model`]), test whether the central and state samples can be
//! pooled and pool them ([`pooling`]), estimate CHE incidence, coverage and
//! cost-component shares with subsample standard errors ([`estimation`]),
//! decompose the weighted Gini of episode spending by subgroup
//! ([`inequality`]), and summarise districts with rank correlations and
//! t-tests ([`stats`]). [`pipeline`] runs all of it and writes a report
//! directory; [`synth`] generates seeded test populations.
//!
//! Runnable examples live in `examples/`:
//!
//! * `load_and_validate` loads the fixture and reports invariant violations
//! * `poolability` runs the runs, chi-square and z tests and pools
//! * `che_incidence` estimates CHE by threshold, district and quintile
//! * `gini_decomposition` decomposes Gini by subgroup in both modes
//! * `inference` shows Spearman, Welch and across-district intervals
//! * `synthetic_population` compares estimates with generated truth
//! * `full_pipeline` writes a complete report directory

pub mod data_model;
pub mod estimation;
pub mod inequality;
pub mod pipeline;
pub mod pooling;
pub mod stats;
pub mod synth;
