use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EpisodeRecord, HouseholdRecord};

/// Categorical field a grouping reads its raw label from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupField {
    Sex,
    Sector,
    SocialGroup,
    Religion,
    Facility,
    CareType,
    Chronic,
}

impl GroupField {
    pub fn raw_label(self, episode: &EpisodeRecord, household: &HouseholdRecord) -> String {
        match self {
            GroupField::Sex => episode.patient_sex.to_string(),
            GroupField::Sector => household.sector.to_string(),
            GroupField::SocialGroup => episode.social_group.to_string(),
            GroupField::Religion => episode.religion.to_string(),
            GroupField::Facility => episode.facility.to_string(),
            GroupField::CareType => episode.care_type.to_string(),
            GroupField::Chronic => if episode.chronic { "Chronic" } else { "NonChronic" }.to_string(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GroupingError {
    #[error("grouping '{0}' has no categories")]
    NoCategories(String),
    #[error("grouping '{name}' lists category '{category}' twice")]
    DuplicateCategory { name: String, category: String },
    #[error("grouping '{name}': merge target '{target}' is not a category")]
    UnknownMergeTarget { name: String, target: String },
    #[error("grouping '{name}' has no category '{category}'")]
    UnknownCategory { name: String, category: String },
    #[error("unknown grouping '{0}' (expected sex, sector, social or religion)")]
    UnknownPreset(String),
}

/// Partition of records into ordered categories. The first category is the
/// reference that anchors the sign of a signed two-group decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingSpec {
    name: String,
    field: GroupField,
    categories: Vec<String>,
    #[serde(default)]
    merge_rules: BTreeMap<String, String>,
}

impl GroupingSpec {
    pub fn new(
        name: impl Into<String>,
        field: GroupField,
        categories: Vec<String>,
        merge_rules: BTreeMap<String, String>,
    ) -> Result<Self, GroupingError> {
        let name = name.into();
        if categories.is_empty() {
            return Err(GroupingError::NoCategories(name));
        }
        let mut seen = HashSet::new();
        for c in &categories {
            if !seen.insert(c.as_str()) {
                return Err(GroupingError::DuplicateCategory { name, category: c.clone() });
            }
        }
        if let Some(target) = merge_rules.values().find(|t| !seen.contains(t.as_str())) {
            return Err(GroupingError::UnknownMergeTarget { name, target: target.clone() });
        }
        Ok(GroupingSpec { name, field, categories, merge_rules })
    }

    fn preset(name: &str, field: GroupField, categories: &[&str], merges: &[(&str, &str)]) -> Self {
        GroupingSpec::new(
            name,
            field,
            categories.iter().map(|s| s.to_string()).collect(),
            merges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        )
        .expect("preset groupings are well formed")
    }

    /// Male vs Female, reference Male.
    pub fn sex() -> Self {
        Self::preset("sex", GroupField::Sex, &["Male", "Female"], &[])
    }

    /// Urban vs Rural, reference Urban.
    pub fn sector() -> Self {
        Self::preset("sector", GroupField::Sector, &["Urban", "Rural"], &[])
    }

    /// Non-SC/ST vs SC and ST combined, reference Others. OBC is merged
    /// into Others.
    pub fn social() -> Self {
        Self::preset(
            "social",
            GroupField::SocialGroup,
            &["Others", "SC&ST"],
            &[("ST", "SC&ST"), ("SC", "SC&ST"), ("OBC", "Others")],
        )
    }

    /// Non-Muslim vs Muslim, reference Others.
    pub fn religion() -> Self {
        Self::preset("religion", GroupField::Religion, &["Others", "Muslim"], &[])
    }

    pub fn by_name(name: &str) -> Result<Self, GroupingError> {
        match name.trim().to_ascii_lowercase().as_str() {
            "sex" | "gender" => Ok(Self::sex()),
            "sector" => Ok(Self::sector()),
            "social" | "social_group" | "caste" => Ok(Self::social()),
            "religion" => Ok(Self::religion()),
            other => Err(GroupingError::UnknownPreset(other.to_string())),
        }
    }

    /// Returns a copy with `category` moved to the reference position.
    pub fn with_reference(mut self, category: &str) -> Result<Self, GroupingError> {
        let pos = self.categories.iter().position(|c| c == category).ok_or_else(|| {
            GroupingError::UnknownCategory { name: self.name.clone(), category: category.to_string() }
        })?;
        let c = self.categories.remove(pos);
        self.categories.insert(0, c);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn field(&self) -> GroupField {
        self.field
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn reference(&self) -> &str {
        &self.categories[0]
    }

    /// Category index for a raw label after applying the merge rules.
    pub fn category_index(&self, raw: &str) -> Option<usize> {
        let label = self.merge_rules.get(raw).map_or(raw, String::as_str);
        self.categories.iter().position(|c| c == label)
    }

    pub fn classify(&self, episode: &EpisodeRecord, household: &HouseholdRecord) -> Option<usize> {
        self.category_index(&self.field.raw_label(episode, household))
    }
}
