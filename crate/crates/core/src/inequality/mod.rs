//! Survey-weighted Gini coefficient and its decomposition into between,
//! within and overlap components by a categorical grouping.
//!
//! With `p_k` the population share, `s_k` the value share and `G_k` the
//! Gini of group k:
//!
//! * within = Σ p_k·s_k·G_k
//! * between (strict) = Gini of the distribution where each record holds
//!   its group mean
//! * between (signed, two groups) = ± p₁p₂|μ₁ − μ₂|/μ, positive when the
//!   reference group has the higher mean
//! * overlap = total − within − between

mod decompose;
mod gini;
mod table;

use thiserror::Error;

pub use decompose::{decompose, decompose_indexed, DecompositionMode, GiniDecomposition, GroupSummary, OVERLAP_TOLERANCE};
pub use gini::weighted_gini;
pub use table::{
    district_decomposition_table, ChronicFilter, GiniRow, GiniTable, GiniTableOptions, GroupCell, ValueSelector,
    STATE_ROW_LABEL,
};

#[derive(Debug, Error, PartialEq)]
pub enum InequalityError {
    #[error("no observations")]
    Empty,
    #[error("length mismatch ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("observation {index} has non-finite value or weight")]
    NonFinite { index: usize },
    #[error("observation {index} has negative value {value}")]
    NegativeValue { index: usize, value: f64 },
    #[error("observation {index} has non-positive weight {weight}")]
    NonPositiveWeight { index: usize, weight: f64 },
    #[error("weighted mean is zero")]
    ZeroMean,
    #[error("category '{0}' has no observations")]
    EmptyCategory(String),
    #[error("signed two-group mode needs exactly 2 categories, got {0}")]
    NotBinary(usize),
    #[error("decomposition needs at least 2 categories, got {0}")]
    TooFewCategories(usize),
    #[error("observation {index}: label '{label}' maps to no category")]
    UnmappedLabel { index: usize, label: String },
}
