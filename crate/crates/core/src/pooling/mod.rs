//! Poolability tests between the central and state samples, and pooling
//! with stratum-proportional rescaling of the multipliers.

mod tests_stat;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_model::{Agency, District, HouseholdRecord, Sector, SurveyDataset};

pub use tests_stat::{
    chi_square_homogeneity, pearson_chi_square, runs_test, z_test_means, ChiSquareResult, RunsTest, ZTest,
    MIN_EXPECTED_COUNT, MIN_RUNS_OBSERVATIONS,
};

#[derive(Debug, Error, PartialEq)]
pub enum PoolingError {
    #[error("too few observations: need {needed}, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("all values are equal; no quantile bins can be formed")]
    DegenerateBins,
    #[error("{observations} observations cannot fill two bins with expected count >= 5")]
    InsufficientData { observations: usize },
    #[error("number of bins must be at least 2, got {0}")]
    InvalidBins(usize),
    #[error("contingency table must be at least 2x2 with positive total")]
    BadTable,
    #[error("both samples have zero variance")]
    ZeroVariance,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("weights must be positive")]
    NonPositiveWeight,
    #[error("length mismatch ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("samples failed the poolability tests (min p = {min_p:.4} <= alpha = {alpha})")]
    NotPoolable { min_p: f64, alpha: f64 },
}

/// Household variable the poolability tests compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PoolVariable {
    #[default]
    Aexp,
    OopTotal,
    PerCapitaExpenditure,
}

impl PoolVariable {
    pub fn value(self, h: &HouseholdRecord) -> f64 {
        match self {
            PoolVariable::Aexp => h.aexp,
            PoolVariable::OopTotal => h.oop_total,
            PoolVariable::PerCapitaExpenditure => h.per_capita_expenditure(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PoolVariable::Aexp => "aexp",
            PoolVariable::OopTotal => "oop_total",
            PoolVariable::PerCapitaExpenditure => "per_capita_expenditure",
        }
    }
}

impl FromStr for PoolVariable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "aexp" => Ok(PoolVariable::Aexp),
            "oop" | "oop_total" => Ok(PoolVariable::OopTotal),
            "mpce" | "per_capita" | "per_capita_expenditure" => Ok(PoolVariable::PerCapitaExpenditure),
            other => Err(format!("unknown poolability variable '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolabilityOptions {
    pub alpha: f64,
    pub variable: PoolVariable,
    pub n_bins: usize,
}

impl Default for PoolabilityOptions {
    fn default() -> Self {
        PoolabilityOptions { alpha: 0.05, variable: PoolVariable::Aexp, n_bins: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolabilityReport {
    pub variable: PoolVariable,
    pub alpha: f64,
    pub n_central: usize,
    pub n_state: usize,
    pub runs_z: f64,
    pub runs_p: f64,
    pub runs_ties_across: usize,
    pub chi2_stat: f64,
    pub chi2_df: usize,
    pub chi2_p: f64,
    pub z_means: f64,
    pub z_means_p: f64,
    pub poolable: bool,
}

impl PoolabilityReport {
    pub fn min_p(&self) -> f64 {
        self.runs_p.min(self.chi2_p).min(self.z_means_p)
    }
}

/// Runs, chi-square and weighted z tests of the chosen household variable.
/// Poolable when every p-value exceeds alpha.
pub fn poolability(
    central: &SurveyDataset,
    state: &SurveyDataset,
    options: &PoolabilityOptions,
) -> Result<PoolabilityReport, PoolingError> {
    if !(options.alpha > 0.0 && options.alpha < 1.0) {
        return Err(PoolingError::InvalidAlpha(options.alpha));
    }
    let values = |d: &SurveyDataset| -> Vec<f64> { d.households.iter().map(|h| options.variable.value(h)).collect() };
    let weights = |d: &SurveyDataset| -> Vec<f64> { d.households.iter().map(|h| h.multiplier).collect() };
    let (a, b) = (values(central), values(state));

    let runs = runs_test(&a, &b)?;
    let chi = chi_square_homogeneity(&a, &b, options.n_bins)?;
    let z = z_test_means(&a, &weights(central), &b, &weights(state))?;

    let min_p = runs.p.min(chi.p).min(z.p);
    Ok(PoolabilityReport {
        variable: options.variable,
        alpha: options.alpha,
        n_central: a.len(),
        n_state: b.len(),
        runs_z: runs.z,
        runs_p: runs.p,
        runs_ties_across: runs.ties_across,
        chi2_stat: chi.stat,
        chi2_df: chi.df,
        chi2_p: chi.p,
        z_means: z.z,
        z_means_p: z.p,
        poolable: min_p > options.alpha,
    })
}

/// A (district, sector) stratum sampled by only one agency. Its
/// multipliers are left unscaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoneStratum {
    pub district: District,
    pub sector: Sector,
    pub agency: Agency,
    pub households: usize,
}

#[derive(Debug, Clone)]
pub struct PooledDataset {
    pub dataset: SurveyDataset,
    pub lone_strata: Vec<LoneStratum>,
    /// True when household ids collided across the inputs and were
    /// prefixed with "C:" / "S:".
    pub ids_prefixed: bool,
}

type StratumKey = (District, Sector);

fn stratum_counts(d: &SurveyDataset) -> BTreeMap<StratumKey, usize> {
    let mut counts = BTreeMap::new();
    for h in &d.households {
        *counts.entry((h.district, h.sector)).or_insert(0) += 1;
    }
    counts
}

/// Concatenates the two samples. Within each (district, sector) stratum a
/// record's multiplier is scaled by n_own / (n_central + n_state), so the
/// pooled stratum total is the sample-size-weighted average of the two
/// agency totals. `force` pools even when the report says otherwise.
pub fn pool_datasets(
    central: &SurveyDataset,
    state: &SurveyDataset,
    report: &PoolabilityReport,
    force: bool,
) -> Result<PooledDataset, PoolingError> {
    if !report.poolable {
        if !force {
            return Err(PoolingError::NotPoolable { min_p: report.min_p(), alpha: report.alpha });
        }
        log::warn!("pooling samples that failed the poolability tests (forced)");
    }

    let central_ids: HashSet<&str> = central.households.iter().map(|h| h.hh_id.as_str()).collect();
    let ids_prefixed = state.households.iter().any(|h| central_ids.contains(h.hh_id.as_str()))
        || {
            let central_eps: HashSet<&str> = central.episodes.iter().map(|e| e.episode_id.as_str()).collect();
            state.episodes.iter().any(|e| central_eps.contains(e.episode_id.as_str()))
        };
    if ids_prefixed {
        log::warn!("household or episode ids collide across samples; prefixing with C:/S:");
    }

    let counts = [stratum_counts(central), stratum_counts(state)];
    let mut lone_strata = Vec::new();
    let mut factors: [HashMap<StratumKey, f64>; 2] = [HashMap::new(), HashMap::new()];
    for role in 0..2 {
        for (&key, &n_own) in &counts[role] {
            let n_other = counts[1 - role].get(&key).copied().unwrap_or(0);
            let factor = if n_other == 0 {
                let agency = if role == 0 { Agency::Central } else { Agency::State };
                log::warn!(
                    "stratum {} / {} sampled only by {}; multipliers kept unscaled",
                    key.0,
                    key.1,
                    agency
                );
                lone_strata.push(LoneStratum { district: key.0, sector: key.1, agency, households: n_own });
                1.0
            } else {
                n_own as f64 / (n_own + n_other) as f64
            };
            factors[role].insert(key, factor);
        }
    }

    let mut households = Vec::with_capacity(central.households.len() + state.households.len());
    let mut episodes = Vec::with_capacity(central.episodes.len() + state.episodes.len());
    // household sort key by (possibly prefixed) id, for ordering episodes
    let mut hh_order: Vec<(StratumKey, usize, String)> = Vec::new();
    for (role, source) in [central, state].into_iter().enumerate() {
        let prefix = if !ids_prefixed {
            ""
        } else if role == 0 {
            "C:"
        } else {
            "S:"
        };
        let mut hh_factor: HashMap<&str, f64> = HashMap::new();
        for h in &source.households {
            let factor = factors[role][&(h.district, h.sector)];
            hh_factor.insert(h.hh_id.as_str(), factor);
            let mut h = h.clone();
            h.multiplier *= factor;
            h.hh_id = format!("{prefix}{}", h.hh_id);
            hh_order.push(((h.district, h.sector), role, h.hh_id.clone()));
            households.push((role, h));
        }
        for e in &source.episodes {
            let factor = hh_factor.get(e.hh_id.as_str()).copied().unwrap_or(1.0);
            let mut e = e.clone();
            e.multiplier *= factor;
            e.hh_id = format!("{prefix}{}", e.hh_id);
            e.episode_id = format!("{prefix}{}", e.episode_id);
            episodes.push(e);
        }
    }

    households.sort_by(|(ra, a), (rb, b)| {
        (a.district, a.sector, ra)
            .cmp(&(b.district, b.sector, rb))
            .then_with(|| a.hh_id.cmp(&b.hh_id))
    });
    hh_order.sort();
    let rank: HashMap<&str, usize> = hh_order.iter().enumerate().map(|(i, k)| (k.2.as_str(), i)).collect();
    episodes.sort_by(|a, b| {
        let ra = rank.get(a.hh_id.as_str()).copied().unwrap_or(usize::MAX);
        let rb = rank.get(b.hh_id.as_str()).copied().unwrap_or(usize::MAX);
        ra.cmp(&rb).then_with(|| a.episode_id.cmp(&b.episode_id))
    });

    let dataset = SurveyDataset::new("pooled", households.into_iter().map(|(_, h)| h).collect(), episodes);
    Ok(PooledDataset { dataset, lone_strata, ids_prefixed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::Subsample;

    fn household(id: &str, district: u8, sector: Sector, agency: Agency, w: f64, aexp: f64) -> HouseholdRecord {
        HouseholdRecord {
            hh_id: id.to_string(),
            district: District::new(district).unwrap(),
            sector,
            agency,
            subsample: Subsample::S1,
            stratum_id: "x".into(),
            multiplier: w,
            hh_size: 1,
            aexp,
            oop_total: 0.0,
            oop_inpatient: 0.0,
            oop_outpatient: 0.0,
            coverage: false,
        }
    }

    fn poolable_report() -> PoolabilityReport {
        PoolabilityReport {
            variable: PoolVariable::Aexp,
            alpha: 0.05,
            n_central: 0,
            n_state: 0,
            runs_z: 0.0,
            runs_p: 1.0,
            runs_ties_across: 0,
            chi2_stat: 0.0,
            chi2_df: 1,
            chi2_p: 1.0,
            z_means: 0.0,
            z_means_p: 1.0,
            poolable: true,
        }
    }

    #[test]
    fn proportional_scaling_10_30() {
        let c: Vec<_> = (0..10).map(|i| household(&format!("c{i}"), 1, Sector::Rural, Agency::Central, 4.0, 1.0)).collect();
        let s: Vec<_> = (0..30).map(|i| household(&format!("s{i}"), 1, Sector::Rural, Agency::State, 4.0, 1.0)).collect();
        let pooled = pool_datasets(
            &SurveyDataset::new("central", c, vec![]),
            &SurveyDataset::new("state", s, vec![]),
            &poolable_report(),
            false,
        )
        .unwrap();
        assert_eq!(pooled.dataset.households.len(), 40);
        for h in &pooled.dataset.households {
            let expected = if h.agency == Agency::Central { 1.0 } else { 3.0 };
            assert!((h.multiplier - expected).abs() < 1e-15);
        }
        assert!(!pooled.ids_prefixed);
    }

    #[test]
    fn pooled_total_is_average_under_equal_n() {
        // central total 100, state total 140
        let c = vec![household("a", 2, Sector::Urban, Agency::Central, 10.0, 4.0), household("b", 2, Sector::Urban, Agency::Central, 10.0, 6.0)];
        let s = vec![household("c", 2, Sector::Urban, Agency::State, 10.0, 7.0), household("d", 2, Sector::Urban, Agency::State, 10.0, 7.0)];
        let pooled = pool_datasets(
            &SurveyDataset::new("central", c, vec![]),
            &SurveyDataset::new("state", s, vec![]),
            &poolable_report(),
            false,
        )
        .unwrap();
        let total: f64 = pooled.dataset.households.iter().map(|h| h.multiplier * h.aexp).sum();
        assert!((total - 120.0).abs() < 1e-12);
    }

    #[test]
    fn lone_stratum_and_prefixing() {
        let c = vec![household("1", 1, Sector::Rural, Agency::Central, 2.0, 1.0)];
        let s = vec![household("1", 1, Sector::Urban, Agency::State, 2.0, 1.0)];
        let pooled = pool_datasets(
            &SurveyDataset::new("central", c, vec![]),
            &SurveyDataset::new("state", s, vec![]),
            &poolable_report(),
            false,
        )
        .unwrap();
        assert_eq!(pooled.lone_strata.len(), 2);
        assert!(pooled.dataset.households.iter().all(|h| h.multiplier == 2.0));
        assert!(pooled.ids_prefixed);
        let ids: Vec<_> = pooled.dataset.households.iter().map(|h| h.hh_id.as_str()).collect();
        assert_eq!(ids, ["C:1", "S:1"]);
    }

    #[test]
    fn not_poolable_unless_forced() {
        let c = vec![household("a", 1, Sector::Rural, Agency::Central, 1.0, 1.0)];
        let s = vec![household("b", 1, Sector::Rural, Agency::State, 1.0, 1.0)];
        let (c, s) = (SurveyDataset::new("central", c, vec![]), SurveyDataset::new("state", s, vec![]));
        let mut report = poolable_report();
        report.poolable = false;
        report.runs_p = 0.01;
        assert!(matches!(pool_datasets(&c, &s, &report, false), Err(PoolingError::NotPoolable { .. })));
        assert_eq!(pool_datasets(&c, &s, &report, true).unwrap().dataset.households.len(), 2);
    }

    #[test]
    fn poolability_report_of_identical_samples() {
        let hs: Vec<_> = (0..60).map(|i| household(&i.to_string(), 1, Sector::Rural, Agency::Central, 1.0, 100.0 + (i * 37 % 60) as f64)).collect();
        let d = SurveyDataset::new("central", hs, vec![]);
        let r = poolability(&d, &d, &PoolabilityOptions::default()).unwrap();
        assert_eq!(r.chi2_stat, 0.0);
        assert_eq!(r.z_means, 0.0);
        assert!((0.0..=1.0).contains(&r.runs_p));
        assert_eq!(r.poolable, r.min_p() > 0.05);
    }
}
