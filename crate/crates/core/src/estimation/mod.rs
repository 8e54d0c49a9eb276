//! Survey-weighted estimators over household and episode records.
//!
//! CHE incidence is household-weighted (multiplier); coverage and the
//! per-capita expenditure quintiles are person-weighted
//! (multiplier × household size); component and delivery shares are
//! episode-weighted. Standard errors come from the two interpenetrating
//! subsamples: se = |ŷ(S1) − ŷ(S2)| / 2.

mod quintile;

use std::borrow::Borrow;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_model::{CareType, Component, District, EpisodeRecord, Facility, HouseholdRecord, Sector, Subsample, SurveyDataset};
use crate::stats::ConfidenceLevel;

pub use quintile::{assign_quintiles, quintile_cuts, QuintileBasis, QuintileCuts, QUINTILE_PROBS};

/// Default CHE thresholds.
pub const DEFAULT_THRESHOLDS: [f64; 3] = [0.1, 0.2, 0.4];

#[derive(Debug, Error, PartialEq)]
pub enum EstimationError {
    #[error("household '{0}' has zero annual expenditure")]
    ZeroDenominator(String),
    #[error("domain has no records with positive weight")]
    EmptyDomain,
    #[error("all per-capita expenditures are equal; quintiles are degenerate")]
    DegenerateDistribution,
    #[error("need at least {needed} households, got {got}")]
    TooFewHouseholds { needed: usize, got: usize },
    #[error("all episode costs in the domain are zero")]
    AllZeroCost,
    #[error("threshold {0} is outside (0, 1)")]
    InvalidThreshold(f64),
}

/// Subset of households by district and/or sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Domain {
    pub district: Option<District>,
    pub sector: Option<Sector>,
}

impl Domain {
    pub const ALL: Domain = Domain { district: None, sector: None };

    pub fn district(d: District) -> Self {
        Domain { district: Some(d), sector: None }
    }

    pub fn sector(s: Sector) -> Self {
        Domain { district: None, sector: Some(s) }
    }

    pub fn contains(&self, h: &HouseholdRecord) -> bool {
        self.district.is_none_or(|d| h.district == d) && self.sector.is_none_or(|s| h.sector == s)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.district, self.sector) {
            (None, None) => f.write_str("all"),
            (Some(d), None) => write!(f, "{d}"),
            (None, Some(s)) => write!(f, "{s}"),
            (Some(d), Some(s)) => write!(f, "{d} / {s}"),
        }
    }
}

/// An estimate on the full sample with its interpenetrating-subsample
/// standard error. `se` is `None` when one subsample is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsampleEstimate {
    pub estimate: f64,
    pub se: Option<f64>,
}

impl SubsampleEstimate {
    pub fn ci(&self, level: ConfidenceLevel) -> Option<(f64, f64)> {
        self.se.map(|se| (self.estimate - level.z() * se, self.estimate + level.z() * se))
    }
}

/// Weighted CHE incidence in one domain at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheEstimate {
    pub threshold: f64,
    pub domain: String,
    pub incidence: f64,
    pub se: Option<f64>,
    /// 99% interval clipped to [0, 1].
    pub ci99: Option<(f64, f64)>,
    pub n: usize,
    /// Households dropped for zero annual expenditure.
    pub excluded: usize,
}

/// 1 when out-of-pocket spending is at least `threshold` of annual
/// expenditure; the boundary counts as catastrophic.
pub fn che_flag(h: &HouseholdRecord, threshold: f64) -> Result<bool, EstimationError> {
    if h.aexp <= 0.0 {
        return Err(EstimationError::ZeroDenominator(h.hh_id.clone()));
    }
    Ok(h.oop_total / h.aexp >= threshold)
}

/// Σ wᵢ·1[indicatorᵢ] / Σ wᵢ.
pub fn weighted_proportion<T>(
    records: &[T],
    indicator: impl Fn(&T) -> bool,
    weight: impl Fn(&T) -> f64,
) -> Result<f64, EstimationError> {
    let mut hit = 0.0;
    let mut total = 0.0;
    for r in records {
        let w = weight(r);
        total += w;
        if indicator(r) {
            hit += w;
        }
    }
    if total > 0.0 {
        Ok(hit / total)
    } else {
        Err(EstimationError::EmptyDomain)
    }
}

fn check_threshold(t: f64) -> Result<(), EstimationError> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(EstimationError::InvalidThreshold(t))
    }
}

/// Household-weighted CHE incidence, skipping households with zero
/// expenditure. Returns the incidence and the number skipped.
pub fn che_incidence<H: Borrow<HouseholdRecord>>(households: &[H], threshold: f64) -> Result<(f64, usize), EstimationError> {
    check_threshold(threshold)?;
    let usable: Vec<&HouseholdRecord> = households.iter().map(Borrow::borrow).filter(|h| h.aexp > 0.0).collect();
    let excluded = households.len() - usable.len();
    let p = weighted_proportion(&usable, |h| che_flag(h, threshold).unwrap_or(false), |h| h.multiplier)?;
    Ok((p, excluded))
}

/// Evaluates `statistic` on the full sample and on each interpenetrating
/// subsample.
pub fn subsample_se<H, F>(households: &[H], statistic: F) -> Result<SubsampleEstimate, EstimationError>
where
    H: Borrow<HouseholdRecord>,
    F: Fn(&[&HouseholdRecord]) -> Result<f64, EstimationError>,
{
    let all: Vec<&HouseholdRecord> = households.iter().map(Borrow::borrow).collect();
    let estimate = statistic(&all)?;
    let half = |s: Subsample| -> Vec<&HouseholdRecord> { all.iter().copied().filter(|h| h.subsample == s).collect() };
    let (s1, s2) = (half(Subsample::S1), half(Subsample::S2));
    let se = if s1.is_empty() || s2.is_empty() {
        None
    } else {
        match (statistic(&s1), statistic(&s2)) {
            (Ok(a), Ok(b)) => Some((a - b).abs() / 2.0),
            _ => None,
        }
    };
    Ok(SubsampleEstimate { estimate, se })
}

fn in_domain<'a, H: Borrow<HouseholdRecord>>(households: &'a [H], domain: &Domain) -> Vec<&'a HouseholdRecord> {
    households.iter().map(Borrow::borrow).filter(|h| domain.contains(h)).collect()
}

fn clip_ci(e: &SubsampleEstimate) -> Option<(f64, f64)> {
    e.ci(ConfidenceLevel::NinetyNine).map(|(lo, hi)| (lo.max(0.0), hi.min(1.0)))
}

/// CHE incidence with subsample standard error for the households in
/// `domain`. `label` overrides the domain description in the output.
pub fn estimate_che_labeled<H: Borrow<HouseholdRecord>>(
    households: &[H],
    threshold: f64,
    label: String,
) -> Result<CheEstimate, EstimationError> {
    let (_, excluded) = che_incidence(households, threshold)?;
    let est = subsample_se(households, |hs| che_incidence(hs, threshold).map(|(p, _)| p))?;
    Ok(CheEstimate {
        threshold,
        domain: label,
        incidence: est.estimate,
        se: est.se,
        ci99: clip_ci(&est),
        n: households.len(),
        excluded,
    })
}

pub fn estimate_che<H: Borrow<HouseholdRecord>>(
    households: &[H],
    threshold: f64,
    domain: &Domain,
) -> Result<CheEstimate, EstimationError> {
    estimate_che_labeled(&in_domain(households, domain), threshold, domain.to_string())
}

/// CHE incidence table by per-capita expenditure quintile: one row per
/// class 1 (poorest) to 5 (richest), one column per threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheByQuintile {
    pub thresholds: Vec<f64>,
    pub cuts: Option<QuintileCuts>,
    /// `rows[class - 1][threshold index]`.
    pub rows: Vec<Vec<Option<CheEstimate>>>,
}

pub fn che_by_quintile<H: Borrow<HouseholdRecord>>(
    households: &[H],
    thresholds: &[f64],
) -> Result<CheByQuintile, EstimationError> {
    let (classes, cuts) = assign_quintiles(households, QuintileBasis::PersonWeighted)?;
    let mut rows = Vec::with_capacity(5);
    for class in 1..=5u8 {
        let members: Vec<&HouseholdRecord> = households
            .iter()
            .zip(&classes)
            .filter(|(_, &c)| c == class)
            .map(|(h, _)| h.borrow())
            .collect();
        let row = thresholds
            .iter()
            .map(|&t| match estimate_che_labeled(&members, t, format!("quintile {class}")) {
                Ok(e) => Ok(Some(e)),
                Err(EstimationError::EmptyDomain) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(CheByQuintile { thresholds: thresholds.to_vec(), cuts, rows })
}

/// share_c = Σ wᵢ·costᵢ,c / Σ wᵢ·totalᵢ over episodes of `care_type`,
/// in schema order.
pub fn component_shares<E: Borrow<EpisodeRecord>>(
    episodes: &[E],
    care_type: CareType,
) -> Result<Vec<(Component, f64)>, EstimationError> {
    let schema = care_type.components();
    let mut sums = vec![0.0; schema.len()];
    let mut any = false;
    for e in episodes.iter().map(Borrow::borrow).filter(|e| e.care_type == care_type) {
        any = true;
        for (s, v) in sums.iter_mut().zip(e.costs.values()) {
            *s += e.multiplier * v;
        }
    }
    if !any {
        return Err(EstimationError::EmptyDomain);
    }
    let total: f64 = sums.iter().sum();
    if total <= 0.0 {
        return Err(EstimationError::AllZeroCost);
    }
    Ok(schema.iter().copied().zip(sums.into_iter().map(|s| s / total)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentShare {
    pub component: Component,
    pub share: f64,
    pub se: Option<f64>,
}

/// Component shares for the episodes of households in `domain`, each with
/// a subsample standard error.
pub fn component_share_estimates(
    dataset: &SurveyDataset,
    care_type: CareType,
    domain: &Domain,
) -> Result<Vec<ComponentShare>, EstimationError> {
    let pairs = dataset.episodes_with_households();
    let pick = |s: Option<Subsample>| -> Vec<&EpisodeRecord> {
        pairs
            .iter()
            .filter(|(_, h)| domain.contains(h) && s.is_none_or(|s| h.subsample == s))
            .map(|(e, _)| *e)
            .collect()
    };
    let full = component_shares(&pick(None), care_type)?;
    let s1 = component_shares(&pick(Some(Subsample::S1)), care_type).ok();
    let s2 = component_shares(&pick(Some(Subsample::S2)), care_type).ok();
    Ok(full
        .into_iter()
        .enumerate()
        .map(|(i, (component, share))| ComponentShare {
            component,
            share,
            se: match (&s1, &s2) {
                (Some(a), Some(b)) => Some((a[i].1 - b[i].1).abs() / 2.0),
                _ => None,
            },
        })
        .collect())
}

/// Person-weighted share of people in households covered by a health
/// scheme.
pub fn coverage_rate<H: Borrow<HouseholdRecord>>(households: &[H], domain: &Domain) -> Result<SubsampleEstimate, EstimationError> {
    let members = in_domain(households, domain);
    subsample_se(&members, |hs| weighted_proportion(hs, |h| h.coverage, |h| h.person_weight()))
}

/// Episode-weighted share of childbirth episodes that took place in a
/// public facility.
pub fn public_delivery_share(dataset: &SurveyDataset, domain: &Domain) -> Result<SubsampleEstimate, EstimationError> {
    let deliveries: Vec<(&EpisodeRecord, &HouseholdRecord)> = dataset
        .episodes_with_households()
        .into_iter()
        .filter(|(e, h)| e.is_delivery && domain.contains(h))
        .collect();
    let share = |s: Option<Subsample>| {
        let eps: Vec<&EpisodeRecord> = deliveries
            .iter()
            .filter(|(_, h)| s.is_none_or(|s| h.subsample == s))
            .map(|(e, _)| *e)
            .collect();
        weighted_proportion(&eps, |e| e.facility == Facility::Public, |e| e.multiplier)
    };
    let estimate = share(None)?;
    let se = match (share(Some(Subsample::S1)), share(Some(Subsample::S2))) {
        (Ok(a), Ok(b)) => Some((a - b).abs() / 2.0),
        _ => None,
    };
    Ok(SubsampleEstimate { estimate, se })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::{Agency, CostComponents, Religion, Sex, SocialGroup};

    pub(crate) fn hh(id: &str, w: f64, size: u32, aexp: f64, oop: f64) -> HouseholdRecord {
        HouseholdRecord {
            hh_id: id.into(),
            district: District::new(1).unwrap(),
            sector: Sector::Rural,
            agency: Agency::Central,
            subsample: Subsample::S1,
            stratum_id: "1-R".into(),
            multiplier: w,
            hh_size: size,
            aexp,
            oop_total: oop,
            oop_inpatient: 0.0,
            oop_outpatient: oop,
            coverage: false,
        }
    }

    fn ep(id: &str, care: CareType, costs: Vec<f64>, w: f64) -> EpisodeRecord {
        EpisodeRecord {
            episode_id: id.into(),
            hh_id: "h".into(),
            care_type: care,
            facility: Facility::Private,
            patient_sex: Sex::Male,
            social_group: SocialGroup::Others,
            religion: Religion::Others,
            chronic: false,
            is_delivery: false,
            costs: CostComponents::new(care, costs).unwrap(),
            multiplier: w,
        }
    }

    #[test]
    fn che_flag_boundaries() {
        assert!(che_flag(&hh("a", 1.0, 1, 100.0, 15.0), 0.10).unwrap());
        assert!(che_flag(&hh("a", 1.0, 1, 100.0, 10.0), 0.10).unwrap());
        assert!(!che_flag(&hh("a", 1.0, 1, 100.0, 39.9), 0.40).unwrap());
        assert_eq!(che_flag(&hh("z", 1.0, 1, 0.0, 5.0), 0.1), Err(EstimationError::ZeroDenominator("z".into())));
    }

    #[test]
    fn proportions() {
        let flags = [(1.0, true), (1.0, true), (1.0, false), (1.0, false)];
        assert_eq!(weighted_proportion(&flags, |r| r.1, |r| r.0).unwrap(), 0.5);
        let flags = [(3.0, true), (1.0, false)];
        assert_eq!(weighted_proportion(&flags, |r| r.1, |r| r.0).unwrap(), 0.75);
        let none: [(f64, bool); 0] = [];
        assert_eq!(weighted_proportion(&none, |r| r.1, |r| r.0), Err(EstimationError::EmptyDomain));
    }

    #[test]
    fn zero_expenditure_excluded() {
        let hs = vec![hh("a", 1.0, 1, 100.0, 50.0), hh("b", 1.0, 1, 100.0, 0.0), hh("c", 5.0, 1, 0.0, 10.0)];
        let (p, excluded) = che_incidence(&hs, 0.1).unwrap();
        assert_eq!(p, 0.5);
        assert_eq!(excluded, 1);
        assert!(che_incidence(&hs, 1.5).is_err());
    }

    #[test]
    fn subsample_standard_error() {
        // S1 incidence 0.30, S2 incidence 0.34
        let mut hs = Vec::new();
        for i in 0..100 {
            let mut h = hh(&format!("a{i}"), 1.0, 1, 100.0, if i < 30 { 50.0 } else { 0.0 });
            h.subsample = Subsample::S1;
            hs.push(h);
        }
        for i in 0..100 {
            let mut h = hh(&format!("b{i}"), 1.0, 1, 100.0, if i < 34 { 50.0 } else { 0.0 });
            h.subsample = Subsample::S2;
            hs.push(h);
        }
        let e = estimate_che(&hs, 0.1, &Domain::ALL).unwrap();
        assert!((e.incidence - 0.32).abs() < 1e-15);
        assert!((e.se.unwrap() - 0.02).abs() < 1e-15);
        let (lo, hi) = e.ci99.unwrap();
        assert!((lo - (0.32 - 2.576 * 0.02)).abs() < 1e-12 && (hi - (0.32 + 2.576 * 0.02)).abs() < 1e-12);
        assert!(lo <= e.incidence && e.incidence <= hi);
    }

    #[test]
    fn identical_subsamples_have_zero_se() {
        let mut hs = Vec::new();
        for s in [Subsample::S1, Subsample::S2] {
            for i in 0..10 {
                let mut h = hh(&format!("{s}{i}"), 2.0, 1, 100.0, i as f64 * 3.0);
                h.subsample = s;
                hs.push(h);
            }
        }
        assert_eq!(estimate_che(&hs, 0.1, &Domain::ALL).unwrap().se, Some(0.0));
    }

    #[test]
    fn one_empty_subsample_has_missing_se() {
        let hs = vec![hh("a", 1.0, 1, 100.0, 50.0), hh("b", 1.0, 1, 100.0, 0.0)];
        let e = estimate_che(&hs, 0.1, &Domain::ALL).unwrap();
        assert_eq!(e.se, None);
        assert_eq!(e.ci99, None);
    }

    #[test]
    fn shares_single_and_symmetric() {
        let only_meds = ep("e", CareType::Outpatient, vec![0.0, 0.0, 80.0, 0.0, 0.0, 0.0, 0.0], 3.0);
        let s = component_shares(&[only_meds], CareType::Outpatient).unwrap();
        assert_eq!(s[2], (Component::MedicinesOther, 1.0));

        let meds = ep("a", CareType::Inpatient, vec![0.0, 0.0, 100.0, 0.0, 0.0, 0.0, 0.0, 0.0], 1.0);
        let doc = ep("b", CareType::Inpatient, vec![0.0, 100.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 1.0);
        let s = component_shares(&[meds, doc], CareType::Inpatient).unwrap();
        assert_eq!(s[1], (Component::DoctorFee, 0.5));
        assert_eq!(s[2], (Component::Medicines, 0.5));
    }

    #[test]
    fn share_errors() {
        let op = ep("e", CareType::Outpatient, vec![0.0; 7], 1.0);
        assert_eq!(component_shares(&[op.clone()], CareType::Inpatient), Err(EstimationError::EmptyDomain));
        assert_eq!(component_shares(&[op], CareType::Outpatient), Err(EstimationError::AllZeroCost));
    }

    #[test]
    fn coverage_person_weighted() {
        let mut a = hh("a", 9.0, 1, 1.0, 0.0);
        let mut b = hh("b", 1.0, 1, 1.0, 0.0);
        a.coverage = false;
        b.coverage = true;
        let e = coverage_rate(&[a.clone(), b.clone()], &Domain::ALL).unwrap();
        assert!((e.estimate - 0.1).abs() < 1e-15);

        // household size shifts the person weight
        b.hh_size = 9;
        let e = coverage_rate(&[a, b], &Domain::ALL).unwrap();
        assert_eq!(e.estimate, 0.5);
    }

    #[test]
    fn domain_filtering() {
        let mut a = hh("a", 1.0, 1, 100.0, 50.0);
        a.district = District::new(5).unwrap();
        let b = hh("b", 1.0, 1, 100.0, 0.0);
        let e = estimate_che(&[a, b], 0.1, &Domain::district(District::new(5).unwrap())).unwrap();
        assert_eq!(e.incidence, 1.0);
        assert_eq!(e.n, 1);
        assert_eq!(e.domain, "Dakshin Dinajpur");
    }
}
