use std::collections::HashSet;

use serde::Serialize;

use super::{SurveyDataset, COMPONENT_SUM_TOLERANCE};

/// A single invariant violation. Indices are zero-based positions in the
/// dataset's record vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyDataset,
    DuplicateHousehold { index: usize, hh_id: String },
    DuplicateEpisode { index: usize, episode_id: String },
    DanglingEpisode { index: usize, episode_id: String, hh_id: String },
    NonPositiveMultiplier { record: String, value: f64 },
    NonPositiveHouseholdSize { hh_id: String },
    NegativeValue { record: String, field: String, value: f64 },
    NonFiniteValue { record: String, field: String },
    ComponentSum { hh_id: String, excess: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_amount(out: &mut Vec<Violation>, record: &str, field: &str, value: f64) {
    if !value.is_finite() {
        out.push(Violation::NonFiniteValue { record: record.to_string(), field: field.to_string() });
    } else if value < 0.0 {
        out.push(Violation::NegativeValue { record: record.to_string(), field: field.to_string(), value });
    }
}

fn check_multiplier(out: &mut Vec<Violation>, record: &str, value: f64) {
    if !(value > 0.0 && value.is_finite()) {
        out.push(Violation::NonPositiveMultiplier { record: record.to_string(), value });
    }
}

/// Lists every invariant violation in `dataset`. Violations are reported,
/// never raised.
pub fn validate_dataset(dataset: &SurveyDataset) -> ValidationReport {
    let mut v = Vec::new();
    if dataset.households.is_empty() {
        v.push(Violation::EmptyDataset);
    }

    let mut ids = HashSet::new();
    for (index, h) in dataset.households.iter().enumerate() {
        if !ids.insert(h.hh_id.as_str()) {
            v.push(Violation::DuplicateHousehold { index, hh_id: h.hh_id.clone() });
        }
        check_multiplier(&mut v, &h.hh_id, h.multiplier);
        if h.hh_size == 0 {
            v.push(Violation::NonPositiveHouseholdSize { hh_id: h.hh_id.clone() });
        }
        for (field, value) in [
            ("aexp", h.aexp),
            ("oop_total", h.oop_total),
            ("oop_inpatient", h.oop_inpatient),
            ("oop_outpatient", h.oop_outpatient),
        ] {
            check_amount(&mut v, &h.hh_id, field, value);
        }
        let excess = h.oop_inpatient + h.oop_outpatient - h.oop_total;
        if excess > COMPONENT_SUM_TOLERANCE {
            v.push(Violation::ComponentSum { hh_id: h.hh_id.clone(), excess });
        }
    }

    let mut episode_ids = HashSet::new();
    for (index, e) in dataset.episodes.iter().enumerate() {
        if !episode_ids.insert(e.episode_id.as_str()) {
            v.push(Violation::DuplicateEpisode { index, episode_id: e.episode_id.clone() });
        }
        if !ids.contains(e.hh_id.as_str()) {
            v.push(Violation::DanglingEpisode {
                index,
                episode_id: e.episode_id.clone(),
                hh_id: e.hh_id.clone(),
            });
        }
        check_multiplier(&mut v, &e.episode_id, e.multiplier);
        for (component, value) in e.costs.iter() {
            check_amount(&mut v, &e.episode_id, component.label(), value);
        }
    }
    ValidationReport { violations: v }
}
