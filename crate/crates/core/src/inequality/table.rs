use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{decompose_indexed, DecompositionMode, GiniDecomposition, InequalityError};
use crate::data_model::{
    CareType, District, EpisodeRecord, Facility, GroupingSpec, HouseholdRecord, Subsample, SurveyDataset,
};
use crate::stats::ConfidenceLevel;

/// Which episodes enter the inequality analysis; the value is the
/// episode's total cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueSelector {
    OopPrivateInpatient,
    OopInpatient,
    OopOutpatient,
    OopAll,
}

impl ValueSelector {
    pub fn includes(self, e: &EpisodeRecord) -> bool {
        match self {
            ValueSelector::OopPrivateInpatient => e.care_type == CareType::Inpatient && e.facility == Facility::Private,
            ValueSelector::OopInpatient => e.care_type == CareType::Inpatient,
            ValueSelector::OopOutpatient => e.care_type == CareType::Outpatient,
            ValueSelector::OopAll => true,
        }
    }
}

impl std::str::FromStr for ValueSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "oop_private_inpatient" => Ok(ValueSelector::OopPrivateInpatient),
            "oop_inpatient" => Ok(ValueSelector::OopInpatient),
            "oop_outpatient" => Ok(ValueSelector::OopOutpatient),
            "oop_all" | "all" => Ok(ValueSelector::OopAll),
            other => Err(format!(
                "unknown value selector '{other}' (expected oop_private_inpatient, oop_inpatient, oop_outpatient or oop_all)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChronicFilter {
    #[default]
    All,
    ChronicOnly,
    NonChronicOnly,
}

impl ChronicFilter {
    pub fn includes(self, e: &EpisodeRecord) -> bool {
        match self {
            ChronicFilter::All => true,
            ChronicFilter::ChronicOnly => e.chronic,
            ChronicFilter::NonChronicOnly => !e.chronic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiniTableOptions {
    pub selector: ValueSelector,
    pub chronic: ChronicFilter,
    pub mode: DecompositionMode,
    /// Rows with fewer selected episodes are flagged as low-n.
    pub low_n_threshold: usize,
    pub significance: ConfidenceLevel,
}

impl Default for GiniTableOptions {
    fn default() -> Self {
        GiniTableOptions {
            selector: ValueSelector::OopPrivateInpatient,
            chronic: ChronicFilter::All,
            mode: DecompositionMode::SignedTwoGroup,
            low_n_threshold: 10,
            significance: ConfidenceLevel::NinetyNine,
        }
    }
}

/// One grouping's decomposition within one table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCell {
    pub grouping: String,
    pub decomposition: Option<GiniDecomposition>,
    /// Only one category present in the domain.
    pub single_group: bool,
    /// Interpenetrating-subsample standard error of the between term.
    pub between_se: Option<f64>,
    pub significant: Option<bool>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiniRow {
    /// `None` for the all-districts row.
    pub district: Option<District>,
    pub label: String,
    pub n_episodes: usize,
    pub low_n: bool,
    pub total: Option<f64>,
    pub cells: Vec<GroupCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiniTable {
    pub options: GiniTableOptions,
    pub groupings: Vec<String>,
    pub rows: Vec<GiniRow>,
}

/// Label of the all-districts row.
pub const STATE_ROW_LABEL: &str = "West Bengal";

struct Obs<'a> {
    value: f64,
    weight: f64,
    episode: &'a EpisodeRecord,
    household: &'a HouseholdRecord,
}

fn decompose_domain(obs: &[&Obs<'_>], grouping: &GroupingSpec, mode: DecompositionMode) -> Result<GiniDecomposition, InequalityError> {
    let raw: Vec<Option<usize>> = obs.iter().map(|o| grouping.classify(o.episode, o.household)).collect();
    if let Some(index) = raw.iter().position(Option::is_none) {
        let label = grouping.field().raw_label(obs[index].episode, obs[index].household);
        return Err(InequalityError::UnmappedLabel { index, label });
    }
    let raw: Vec<usize> = raw.into_iter().flatten().collect();
    let values: Vec<f64> = obs.iter().map(|o| o.value).collect();
    let weights: Vec<f64> = obs.iter().map(|o| o.weight).collect();

    // keep only categories present in the domain, reference first
    let present: BTreeSet<usize> = raw.iter().copied().collect();
    let kept: Vec<usize> = present.into_iter().collect();
    let categories: Vec<String> = kept.iter().map(|&i| grouping.categories()[i].clone()).collect();
    if kept.len() == 1 {
        return GiniDecomposition::single_group(grouping.name(), mode, &categories[0], &values, &weights);
    }
    let groups: Vec<usize> = raw.iter().map(|g| kept.iter().position(|k| k == g).unwrap()).collect();
    decompose_indexed(&values, &weights, &groups, grouping.name(), &categories, mode)
}

fn build_cell(obs: &[&Obs<'_>], grouping: &GroupingSpec, options: &GiniTableOptions) -> GroupCell {
    let mut cell = GroupCell {
        grouping: grouping.name().to_string(),
        decomposition: None,
        single_group: false,
        between_se: None,
        significant: None,
        note: None,
    };
    match decompose_domain(obs, grouping, options.mode) {
        Ok(d) => {
            cell.single_group = d.groups.len() == 1;
            if !cell.single_group {
                let half = |s: Subsample| -> Vec<&Obs<'_>> {
                    obs.iter().copied().filter(|o| o.household.subsample == s).collect()
                };
                let (s1, s2) = (half(Subsample::S1), half(Subsample::S2));
                if let (Ok(a), Ok(b)) =
                    (decompose_domain(&s1, grouping, options.mode), decompose_domain(&s2, grouping, options.mode))
                {
                    let se = (a.between - b.between).abs() / 2.0;
                    cell.between_se = Some(se);
                    cell.significant = Some(d.between.abs() > options.significance.z() * se);
                }
            }
            cell.decomposition = Some(d);
        }
        Err(e) => cell.note = Some(e.to_string()),
    }
    cell
}

fn build_row(
    district: Option<District>,
    obs: &[&Obs<'_>],
    groupings: &[GroupingSpec],
    options: &GiniTableOptions,
) -> GiniRow {
    let label = district.map_or(STATE_ROW_LABEL.to_string(), |d| d.name().to_string());
    let values: Vec<f64> = obs.iter().map(|o| o.value).collect();
    let weights: Vec<f64> = obs.iter().map(|o| o.weight).collect();
    let total = super::weighted_gini(&values, &weights).ok();
    let cells = if total.is_some() {
        groupings.iter().map(|g| build_cell(obs, g, options)).collect()
    } else {
        groupings
            .iter()
            .map(|g| GroupCell {
                grouping: g.name().to_string(),
                decomposition: None,
                single_group: false,
                between_se: None,
                significant: None,
                note: Some("no positive spending in domain".to_string()),
            })
            .collect()
    };
    GiniRow { district, label, n_episodes: obs.len(), low_n: obs.len() < options.low_n_threshold, total, cells }
}

/// One decomposition row per district present in the dataset, in district
/// code order, followed by the all-districts row.
pub fn district_decomposition_table(
    dataset: &SurveyDataset,
    groupings: &[GroupingSpec],
    options: &GiniTableOptions,
) -> Result<GiniTable, InequalityError> {
    let obs: Vec<Obs<'_>> = dataset
        .episodes_with_households()
        .into_iter()
        .filter(|(e, _)| options.selector.includes(e) && options.chronic.includes(e))
        .map(|(e, h)| Obs { value: e.total_cost(), weight: e.multiplier, episode: e, household: h })
        .collect();
    if let Some((index, o)) = obs.iter().enumerate().find(|(_, o)| !(o.weight > 0.0) || o.value < 0.0) {
        return Err(if o.value < 0.0 {
            InequalityError::NegativeValue { index, value: o.value }
        } else {
            InequalityError::NonPositiveWeight { index, weight: o.weight }
        });
    }

    let districts: BTreeSet<District> = dataset.households.iter().map(|h| h.district).collect();
    let districts: Vec<District> = districts.into_iter().collect();
    let mut rows: Vec<GiniRow> = districts
        .par_iter()
        .map(|&d| {
            let domain: Vec<&Obs<'_>> = obs.iter().filter(|o| o.household.district == d).collect();
            build_row(Some(d), &domain, groupings, options)
        })
        .collect();
    let all: Vec<&Obs<'_>> = obs.iter().collect();
    rows.push(build_row(None, &all, groupings, options));

    Ok(GiniTable {
        options: options.clone(),
        groupings: groupings.iter().map(|g| g.name().to_string()).collect(),
        rows,
    })
}

fn opt(v: Option<f64>, decimals: usize) -> String {
    v.map(|x| format!("{x:.decimals$}")).unwrap_or_default()
}

impl GiniTable {
    /// CSV with Gini values to 4 decimals and percent shares to 1 decimal.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![
            "district_code".to_string(),
            "district".to_string(),
            "n_episodes".to_string(),
            "low_n".to_string(),
            "total_gini".to_string(),
        ];
        for g in &self.groupings {
            for col in ["between", "between_pct", "within", "within_pct", "overlap", "overlap_pct", "between_se", "significant"] {
                header.push(format!("{g}_{col}"));
            }
        }
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![
                row.district.map(|d| d.code().to_string()).unwrap_or_default(),
                row.label.clone(),
                row.n_episodes.to_string(),
                row.low_n.to_string(),
                opt(row.total, 4),
            ];
            for cell in &row.cells {
                let d = cell.decomposition.as_ref();
                rec.push(opt(d.map(|d| d.between), 4));
                rec.push(opt(d.map(|d| d.between_share), 1));
                rec.push(opt(d.map(|d| d.within), 4));
                rec.push(opt(d.map(|d| d.within_share), 1));
                rec.push(opt(d.map(|d| d.overlap), 4));
                rec.push(opt(d.map(|d| d.overlap_share), 1));
                rec.push(opt(cell.between_se, 4));
                rec.push(cell.significant.map(|s| s.to_string()).unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Plain-text rendering with each component followed by its percent of
    /// total in parentheses and `***` on significant between terms.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&row.label);
            out.push(' ');
            out.push_str(&opt(row.total, 3));
            for cell in &row.cells {
                if let Some(d) = &cell.decomposition {
                    let stars = if cell.significant == Some(true) { "***" } else { "" };
                    out.push_str(&format!(
                        " | {} between {:.3}{} ({:.1}) | within {:.3} ({:.1})",
                        cell.grouping, d.between, stars, d.between_share, d.within, d.within_share
                    ));
                } else {
                    out.push_str(&format!(" | {} n/a", cell.grouping));
                }
            }
            if row.low_n {
                out.push_str(" [low n]");
            }
            out.push('\n');
        }
        out
    }
}
