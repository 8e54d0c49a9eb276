use serde::{Deserialize, Serialize};

use super::gini::{check_inputs, gini_unchecked};
use super::InequalityError;
use crate::data_model::GroupingSpec;

/// Overlap values this close to zero are snapped to zero in strict mode.
pub const OVERLAP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionMode {
    /// Two groups; the between term carries the sign of
    /// (reference mean − other mean).
    #[serde(alias = "signed")]
    SignedTwoGroup,
    /// Any number of groups; between and overlap are non-negative.
    #[serde(alias = "strict", alias = "pyatt")]
    StrictPyatt,
}

impl std::str::FromStr for DecompositionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "signed" | "signed_two_group" => Ok(DecompositionMode::SignedTwoGroup),
            "strict" | "pyatt" | "strict_pyatt" => Ok(DecompositionMode::StrictPyatt),
            other => Err(format!("unknown decomposition mode '{other}' (expected signed or strict)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub n: usize,
    /// Population (weight) share p_k.
    pub pop_share: f64,
    /// Share of the total value s_k = p_k·μ_k/μ.
    pub value_share: f64,
    pub mean: f64,
    pub gini: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiniDecomposition {
    pub grouping: String,
    pub mode: DecompositionMode,
    pub total: f64,
    pub between: f64,
    pub within: f64,
    pub overlap: f64,
    /// Components as percent of `total`.
    pub between_share: f64,
    pub within_share: f64,
    pub overlap_share: f64,
    pub groups: Vec<GroupSummary>,
}

impl GiniDecomposition {
    fn assemble(
        grouping: &str,
        mode: DecompositionMode,
        total: f64,
        between: f64,
        within: f64,
        overlap: f64,
        groups: Vec<GroupSummary>,
    ) -> Self {
        let share = |c: f64| if total > 0.0 { 100.0 * c / total } else { 0.0 };
        GiniDecomposition {
            grouping: grouping.to_string(),
            mode,
            total,
            between,
            within,
            overlap,
            between_share: share(between),
            within_share: share(within),
            overlap_share: share(overlap),
            groups,
        }
    }

    /// Decomposition of a domain where every record falls in one category:
    /// the whole Gini is within-group.
    pub fn single_group(
        grouping: &str,
        mode: DecompositionMode,
        label: &str,
        values: &[f64],
        weights: &[f64],
    ) -> Result<Self, InequalityError> {
        check_inputs(values, weights)?;
        let total = gini_unchecked(values, weights)?;
        let w: f64 = weights.iter().sum();
        let mean = values.iter().zip(weights).map(|(y, w)| y * w).sum::<f64>() / w;
        let group = GroupSummary {
            label: label.to_string(),
            n: values.len(),
            pop_share: 1.0,
            value_share: 1.0,
            mean,
            gini: total,
        };
        Ok(Self::assemble(grouping, mode, total, 0.0, total, 0.0, vec![group]))
    }
}

/// Decomposes the weighted Gini of `values` by the grouping, with each
/// record's category given by its raw label (merge rules applied).
pub fn decompose<S: AsRef<str>>(
    values: &[f64],
    weights: &[f64],
    labels: &[S],
    grouping: &GroupingSpec,
    mode: DecompositionMode,
) -> Result<GiniDecomposition, InequalityError> {
    if labels.len() != values.len() {
        return Err(InequalityError::LengthMismatch(values.len(), labels.len()));
    }
    let groups = labels
        .iter()
        .enumerate()
        .map(|(index, l)| {
            grouping
                .category_index(l.as_ref())
                .ok_or_else(|| InequalityError::UnmappedLabel { index, label: l.as_ref().to_string() })
        })
        .collect::<Result<Vec<_>, _>>()?;
    decompose_indexed(values, weights, &groups, grouping.name(), grouping.categories(), mode)
}

/// Decomposition with categories already resolved to indices into
/// `categories`; index 0 is the reference category.
pub fn decompose_indexed(
    values: &[f64],
    weights: &[f64],
    groups: &[usize],
    grouping: &str,
    categories: &[String],
    mode: DecompositionMode,
) -> Result<GiniDecomposition, InequalityError> {
    check_inputs(values, weights)?;
    if groups.len() != values.len() {
        return Err(InequalityError::LengthMismatch(values.len(), groups.len()));
    }
    let k = categories.len();
    if mode == DecompositionMode::SignedTwoGroup && k != 2 {
        return Err(InequalityError::NotBinary(k));
    }
    if k < 2 {
        return Err(InequalityError::TooFewCategories(k));
    }
    if let Some(&g) = groups.iter().find(|&&g| g >= k) {
        return Err(InequalityError::UnmappedLabel { index: g, label: format!("category #{g}") });
    }

    let mut members: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); k];
    for ((&y, &w), &g) in values.iter().zip(weights).zip(groups) {
        members[g].0.push(y);
        members[g].1.push(w);
    }
    if let Some(empty) = members.iter().position(|(v, _)| v.is_empty()) {
        return Err(InequalityError::EmptyCategory(categories[empty].clone()));
    }

    let total = gini_unchecked(values, weights)?;
    let total_weight: f64 = weights.iter().sum();
    let mean = values.iter().zip(weights).map(|(y, w)| y * w).sum::<f64>() / total_weight;

    let mut summaries = Vec::with_capacity(k);
    let mut group_weights = Vec::with_capacity(k);
    for ((vals, ws), label) in members.iter().zip(categories) {
        let w: f64 = ws.iter().sum();
        let group_mean = vals.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / w;
        let pop_share = w / total_weight;
        // a group whose values are all zero has no inequality of its own
        let gini = if group_mean > 0.0 { gini_unchecked(vals, ws)? } else { 0.0 };
        summaries.push(GroupSummary {
            label: label.clone(),
            n: vals.len(),
            pop_share,
            value_share: pop_share * group_mean / mean,
            mean: group_mean,
            gini,
        });
        group_weights.push(w);
    }

    let within: f64 = summaries.iter().map(|g| g.pop_share * g.value_share * g.gini).sum();

    let between = match mode {
        DecompositionMode::StrictPyatt => {
            let means: Vec<f64> = summaries.iter().map(|g| g.mean).collect();
            gini_unchecked(&means, &group_weights)?
        }
        DecompositionMode::SignedTwoGroup => {
            let (reference, other) = (&summaries[0], &summaries[1]);
            let magnitude = reference.pop_share * other.pop_share * (reference.mean - other.mean).abs() / mean;
            if reference.mean > other.mean {
                magnitude
            } else if reference.mean < other.mean {
                -magnitude
            } else {
                0.0
            }
        }
    };

    let mut overlap = total - within - between;
    if mode == DecompositionMode::StrictPyatt && overlap < 0.0 {
        if overlap > -OVERLAP_TOLERANCE {
            overlap = 0.0;
        } else {
            log::warn!("strict overlap for '{grouping}' is {overlap:e}, below tolerance");
        }
    }

    Ok(GiniDecomposition::assemble(grouping, mode, total, between, within, overlap, summaries))
}
