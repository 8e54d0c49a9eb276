//! Survey microdata schema: households, care episodes and the datasets
//! that bundle them, plus CSV ingestion and validation.

mod csv_io;
mod district;
mod grouping;
mod validate;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use csv_io::{
    load_dataset, load_episodes, load_households, read_episodes, read_households,
    write_episodes, write_households, DataError, EPISODE_BASE_COLUMNS, HOUSEHOLD_COLUMNS,
};
pub use district::{District, DISTRICT_COUNT};
pub use grouping::{GroupField, GroupingError, GroupingSpec};
pub use validate::{validate_dataset, ValidationReport, Violation};

/// Slack allowed when checking that inpatient and outpatient OOP do not
/// exceed the household total.
pub const COMPONENT_SUM_TOLERANCE: f64 = 1e-6;

macro_rules! label_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal $(| $alias:literal)*),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $label)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let t = s.trim();
                $(
                    if t.eq_ignore_ascii_case($label) $(|| t.eq_ignore_ascii_case($alias))* {
                        return Ok($name::$variant);
                    }
                )+
                Err(format!("'{}' is not a valid {}", s, stringify!($name)))
            }
        }
    };
}

label_enum!(Sector { Rural => "Rural" | "1", Urban => "Urban" | "2" });
label_enum!(Agency { Central => "Central" | "C", State => "State" | "S" });
label_enum!(Subsample { S1 => "S1" | "1", S2 => "S2" | "2" });
label_enum!(CareType { Inpatient => "Inpatient" | "IP", Outpatient => "Outpatient" | "OP" });
label_enum!(Facility { Public => "Public", Private => "Private" });
label_enum!(Sex { Male => "Male" | "M", Female => "Female" | "F" });
label_enum!(SocialGroup { ST => "ST", SC => "SC", OBC => "OBC", Others => "Others" });
label_enum!(Religion { Muslim => "Muslim", Others => "Others" });

label_enum!(
    /// Expenditure components of a care episode. Inpatient and outpatient
    /// episodes each use a fixed subset, see [`CareType::components`].
    Component {
        Package => "package",
        DoctorFee => "doctor_fee",
        Medicines => "medicines",
        MedicinesAyush => "medicines_ayush",
        MedicinesOther => "medicines_other",
        Diagnostics => "diagnostics",
        BedCharges => "bed_charges",
        OtherMedical => "other_medical",
        Transport => "transport",
        OtherNonmedical => "other_nonmedical",
    }
);

const INPATIENT_COMPONENTS: [Component; 8] = [
    Component::Package,
    Component::DoctorFee,
    Component::Medicines,
    Component::Diagnostics,
    Component::BedCharges,
    Component::OtherMedical,
    Component::Transport,
    Component::OtherNonmedical,
];

const OUTPATIENT_COMPONENTS: [Component; 7] = [
    Component::DoctorFee,
    Component::MedicinesAyush,
    Component::MedicinesOther,
    Component::Diagnostics,
    Component::OtherMedical,
    Component::Transport,
    Component::OtherNonmedical,
];

impl CareType {
    /// The cost components recorded for this kind of episode, in column order.
    pub fn components(self) -> &'static [Component] {
        match self {
            CareType::Inpatient => &INPATIENT_COMPONENTS,
            CareType::Outpatient => &OUTPATIENT_COMPONENTS,
        }
    }
}

/// One surveyed household.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdRecord {
    pub hh_id: String,
    pub district: District,
    pub sector: Sector,
    pub agency: Agency,
    pub subsample: Subsample,
    pub stratum_id: String,
    /// Design weight.
    pub multiplier: f64,
    pub hh_size: u32,
    /// Annual usual consumer expenditure.
    pub aexp: f64,
    /// Annual out-of-pocket health expenditure.
    pub oop_total: f64,
    pub oop_inpatient: f64,
    pub oop_outpatient: f64,
    /// Any member covered by a health scheme.
    pub coverage: bool,
}

impl HouseholdRecord {
    pub fn per_capita_expenditure(&self) -> f64 {
        self.aexp / self.hh_size as f64
    }

    pub fn person_weight(&self) -> f64 {
        self.multiplier * self.hh_size as f64
    }
}

/// Component costs of one episode, aligned with `care_type.components()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostComponents {
    care_type: CareType,
    values: Vec<f64>,
}

impl CostComponents {
    /// Builds the cost vector for `care_type`. Returns `None` when the number
    /// of values does not match the component schema.
    pub fn new(care_type: CareType, values: Vec<f64>) -> Option<Self> {
        (values.len() == care_type.components().len()).then_some(CostComponents { care_type, values })
    }

    /// Builds the cost vector from `(component, value)` pairs. Every
    /// component of the schema must appear exactly once.
    pub fn from_pairs(care_type: CareType, pairs: &[(Component, f64)]) -> Option<Self> {
        let schema = care_type.components();
        if pairs.len() != schema.len() {
            return None;
        }
        let values = schema
            .iter()
            .map(|c| {
                let mut hits = pairs.iter().filter(|(k, _)| k == c);
                match (hits.next(), hits.next()) {
                    (Some((_, v)), None) => Some(*v),
                    _ => None,
                }
            })
            .collect::<Option<Vec<_>>>()?;
        Some(CostComponents { care_type, values })
    }

    pub fn care_type(&self) -> CareType {
        self.care_type
    }

    pub fn get(&self, component: Component) -> Option<f64> {
        self.care_type
            .components()
            .iter()
            .position(|c| *c == component)
            .map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Component, f64)> + '_ {
        self.care_type.components().iter().copied().zip(self.values.iter().copied())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// One inpatient or outpatient care episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode_id: String,
    pub hh_id: String,
    pub care_type: CareType,
    pub facility: Facility,
    pub patient_sex: Sex,
    pub social_group: SocialGroup,
    pub religion: Religion,
    pub chronic: bool,
    pub is_delivery: bool,
    pub costs: CostComponents,
    pub multiplier: f64,
}

impl EpisodeRecord {
    pub fn total_cost(&self) -> f64 {
        self.costs.total()
    }
}

/// Households and episodes of one survey sample (central, state or pooled).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyDataset {
    pub label: String,
    pub households: Vec<HouseholdRecord>,
    pub episodes: Vec<EpisodeRecord>,
}

impl SurveyDataset {
    pub fn new(
        label: impl Into<String>,
        households: Vec<HouseholdRecord>,
        episodes: Vec<EpisodeRecord>,
    ) -> Self {
        SurveyDataset { label: label.into(), households, episodes }
    }

    /// Map from `hh_id` to index into `households`. Later duplicates win;
    /// [`validate_dataset`] reports them.
    pub fn household_index(&self) -> HashMap<&str, usize> {
        self.households
            .iter()
            .enumerate()
            .map(|(i, h)| (h.hh_id.as_str(), i))
            .collect()
    }

    /// Episodes paired with the household they belong to. Dangling episodes
    /// are skipped.
    pub fn episodes_with_households(&self) -> Vec<(&EpisodeRecord, &HouseholdRecord)> {
        let index = self.household_index();
        self.episodes
            .iter()
            .filter_map(|e| index.get(e.hh_id.as_str()).map(|&i| (e, &self.households[i])))
            .collect()
    }
}
