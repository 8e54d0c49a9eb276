//! Seeded synthetic survey population with two disjoint agency samples
//! and population-level ground truth.
//!
//! Each district's finite population is generated on its own ChaCha8
//! stream, so output does not depend on thread scheduling. Per-capita
//! expenditure is lognormal; households that spend on health draw an
//! OOP/expenditure ratio from a Beta distribution, shifted by expenditure
//! quintile and by household group effects, and split it over episodes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, LogNormal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_model::{
    write_episodes, write_households, Agency, CareType, CostComponents, DataError, District, EpisodeRecord, Facility,
    HouseholdRecord, Religion, Sector, Sex, SocialGroup, Subsample, SurveyDataset,
};
use crate::estimation::{quintile_cuts, QuintileBasis, QuintileCuts};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Multiplicative shifts of expected health spending. Household effects
/// scale the OOP ratio; `female` and `public_facility` scale an episode's
/// share of its household's spending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroupEffects {
    pub female: f64,
    pub rural: f64,
    pub sc_st: f64,
    pub muslim: f64,
    pub public_facility: f64,
}

impl Default for GroupEffects {
    fn default() -> Self {
        GroupEffects { female: 0.85, rural: 1.1, sc_st: 0.9, muslim: 0.95, public_facility: 0.35 }
    }
}

impl GroupEffects {
    pub fn neutral() -> Self {
        GroupEffects { female: 1.0, rural: 1.0, sc_st: 1.0, muslim: 1.0, public_facility: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    /// District codes to generate; empty means all 19.
    pub districts: Vec<u8>,
    pub population_per_district: usize,
    /// Sample size of each agency in each district.
    pub households_per_agency: usize,
    /// Lognormal parameters of annual per-capita expenditure.
    pub pce_log_mean: f64,
    pub pce_log_sd: f64,
    /// Household size is 1 + Poisson(mean).
    pub extra_members_mean: f64,
    pub p_rural: f64,
    /// Probability that a household has any health spending.
    pub p_any_spend: f64,
    /// Beta parameters of the OOP/expenditure ratio.
    pub oop_ratio_alpha: f64,
    pub oop_ratio_beta: f64,
    /// Ratio multiplier per expenditure quintile, poorest first.
    pub quintile_shift: [f64; 5],
    pub effects: GroupEffects,
    /// Extra episodes per spending household, Poisson mean.
    pub extra_episodes_mean: f64,
    pub p_inpatient: f64,
    pub p_private: f64,
    pub p_female: f64,
    pub p_chronic: f64,
    /// Probability that a female inpatient episode is a delivery.
    pub p_delivery: f64,
    /// Probabilities of ST, SC, OBC (Others takes the rest).
    pub p_social: [f64; 3],
    pub p_muslim: f64,
    pub coverage_prob: f64,
    /// Per-district coverage probability overrides, by district code.
    pub coverage_by_district: BTreeMap<u8, f64>,
    /// Thresholds at which the ground-truth CHE incidence is reported.
    pub truth_thresholds: Vec<f64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            districts: Vec::new(),
            population_per_district: 10_000,
            households_per_agency: 1_000,
            pce_log_mean: 10.0,
            pce_log_sd: 0.6,
            extra_members_mean: 3.2,
            p_rural: 0.68,
            p_any_spend: 0.42,
            oop_ratio_alpha: 0.6,
            oop_ratio_beta: 1.6,
            quintile_shift: [1.3, 1.2, 1.1, 1.0, 0.9],
            effects: GroupEffects::default(),
            extra_episodes_mean: 0.6,
            p_inpatient: 0.35,
            p_private: 0.55,
            p_female: 0.5,
            p_chronic: 0.2,
            p_delivery: 0.15,
            p_social: [0.06, 0.23, 0.07],
            p_muslim: 0.27,
            coverage_prob: 0.14,
            coverage_by_district: BTreeMap::from([(3, 0.007), (8, 0.365)]),
            truth_thresholds: vec![0.1, 0.2, 0.4],
        }
    }
}

fn check_probability(name: &str, p: f64) -> Result<(), SynthError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SynthError::InvalidConfig(format!("{name} = {p} is not a probability")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), SynthError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SynthError::InvalidConfig(format!("{name} = {v} must be positive")))
    }
}

impl SynthConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, SynthError> {
        let file = File::open(path)?;
        Ok(serde_json::from_reader(file)?)
    }

    pub fn district_list(&self) -> Result<Vec<District>, SynthError> {
        if self.districts.is_empty() {
            return Ok(District::all().collect());
        }
        let mut out = Vec::with_capacity(self.districts.len());
        for &code in &self.districts {
            let d = District::new(code).ok_or_else(|| SynthError::InvalidConfig(format!("unknown district code {code}")))?;
            if out.contains(&d) {
                return Err(SynthError::InvalidConfig(format!("district {code} listed twice")));
            }
            out.push(d);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.district_list()?;
        if self.households_per_agency < 4 {
            return Err(SynthError::InvalidConfig("households_per_agency must be at least 4".into()));
        }
        if self.population_per_district < 2 * self.households_per_agency {
            return Err(SynthError::InvalidConfig("population_per_district must hold both agency samples".into()));
        }
        check_positive("pce_log_sd", self.pce_log_sd)?;
        if !self.pce_log_mean.is_finite() {
            return Err(SynthError::InvalidConfig("pce_log_mean must be finite".into()));
        }
        check_positive("oop_ratio_alpha", self.oop_ratio_alpha)?;
        check_positive("oop_ratio_beta", self.oop_ratio_beta)?;
        for (i, &s) in self.quintile_shift.iter().enumerate() {
            check_positive(&format!("quintile_shift[{i}]"), s)?;
        }
        let e = &self.effects;
        for (name, v) in [
            ("effects.female", e.female),
            ("effects.rural", e.rural),
            ("effects.sc_st", e.sc_st),
            ("effects.muslim", e.muslim),
            ("effects.public_facility", e.public_facility),
        ] {
            check_positive(name, v)?;
        }
        for (name, v) in [("extra_members_mean", self.extra_members_mean), ("extra_episodes_mean", self.extra_episodes_mean)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SynthError::InvalidConfig(format!("{name} = {v} must be non-negative")));
            }
        }
        for (name, p) in [
            ("p_rural", self.p_rural),
            ("p_any_spend", self.p_any_spend),
            ("p_inpatient", self.p_inpatient),
            ("p_private", self.p_private),
            ("p_female", self.p_female),
            ("p_chronic", self.p_chronic),
            ("p_delivery", self.p_delivery),
            ("p_muslim", self.p_muslim),
            ("coverage_prob", self.coverage_prob),
        ] {
            check_probability(name, p)?;
        }
        for &p in &self.p_social {
            check_probability("p_social", p)?;
        }
        check_probability("sum of p_social", self.p_social.iter().sum())?;
        for (&code, &p) in &self.coverage_by_district {
            District::new(code).ok_or_else(|| SynthError::InvalidConfig(format!("unknown district code {code}")))?;
            check_probability("coverage_by_district", p)?;
        }
        for &t in &self.truth_thresholds {
            if !(t > 0.0 && t < 1.0) {
                return Err(SynthError::InvalidConfig(format!("threshold {t} outside (0, 1)")));
            }
        }
        Ok(())
    }

    fn coverage_for(&self, d: District) -> f64 {
        self.coverage_by_district.get(&d.code()).copied().unwrap_or(self.coverage_prob)
    }
}

/// Population-level quantities from exhaustive evaluation of the
/// generated population (every weight 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub households: usize,
    pub episodes: usize,
    pub thresholds: Vec<f64>,
    pub che_incidence: Vec<f64>,
    pub che_by_district: BTreeMap<u8, Vec<f64>>,
    /// Rows are quintile classes 1..5, columns are thresholds.
    pub che_by_quintile: Vec<Vec<f64>>,
    pub quintile_cuts: [f64; 4],
    /// Person share of coverage.
    pub coverage_rate: f64,
    /// Gini of private inpatient episode costs.
    pub gini_private_inpatient: Option<f64>,
    /// Mean private inpatient episode cost by patient sex: [male, female].
    pub mean_private_inpatient_by_sex: [Option<f64>; 2],
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub population: SurveyDataset,
    pub central: SurveyDataset,
    pub state: SurveyDataset,
    pub truth: SynthTruth,
}

const STREAM_BASE: u64 = 0;
const STREAM_SPEND: u64 = 1;
const STREAM_SAMPLE: u64 = 2;

fn rng_for(seed: u64, district: District, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(district.code()) * 8 + purpose);
    rng
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Gamma shape per component, in `CareType::components()` order.
fn component_shapes(care: CareType) -> &'static [f64] {
    match care {
        CareType::Inpatient => &[2.0, 1.0, 2.5, 1.0, 0.8, 0.5, 0.5, 0.4],
        CareType::Outpatient => &[1.0, 0.15, 4.0, 1.0, 0.3, 0.4, 0.2],
    }
}

fn pop_id(d: District, i: usize) -> String {
    format!("{:02}-{:06}", d.code(), i)
}

/// Households of one district without health spending.
fn base_households(config: &SynthConfig, d: District) -> Vec<(HouseholdRecord, SocialGroup, Religion)> {
    let mut rng = rng_for(config.seed, d, STREAM_BASE);
    let pce = LogNormal::new(config.pce_log_mean, config.pce_log_sd).expect("validated");
    let members = (config.extra_members_mean > 0.0).then(|| Poisson::new(config.extra_members_mean).expect("validated"));
    let coverage = config.coverage_for(d);
    (0..config.population_per_district)
        .map(|i| {
            let sector = if rng.random_bool(config.p_rural) { Sector::Rural } else { Sector::Urban };
            let hh_size = 1 + members.as_ref().map_or(0, |m| m.sample(&mut rng) as u32);
            let aexp = round2(pce.sample(&mut rng) * hh_size as f64).max(0.01);
            let u: f64 = rng.random();
            let [p_st, p_sc, p_obc] = config.p_social;
            let social = if u < p_st {
                SocialGroup::ST
            } else if u < p_st + p_sc {
                SocialGroup::SC
            } else if u < p_st + p_sc + p_obc {
                SocialGroup::OBC
            } else {
                SocialGroup::Others
            };
            let religion = if rng.random_bool(config.p_muslim) { Religion::Muslim } else { Religion::Others };
            let h = HouseholdRecord {
                hh_id: pop_id(d, i),
                district: d,
                sector,
                agency: Agency::Central,
                subsample: if i % 2 == 0 { Subsample::S1 } else { Subsample::S2 },
                stratum_id: format!("{:02}-{}", d.code(), sector.label()),
                multiplier: 1.0,
                hh_size,
                aexp,
                oop_total: 0.0,
                oop_inpatient: 0.0,
                oop_outpatient: 0.0,
                coverage: rng.random_bool(coverage),
            };
            (h, social, religion)
        })
        .collect()
}

/// Adds health spending and episodes to one district's households.
fn add_spending(
    config: &SynthConfig,
    d: District,
    base: Vec<(HouseholdRecord, SocialGroup, Religion)>,
    cuts: &QuintileCuts,
) -> (Vec<HouseholdRecord>, Vec<EpisodeRecord>) {
    let mut rng = rng_for(config.seed, d, STREAM_SPEND);
    let ratio = Beta::new(config.oop_ratio_alpha, config.oop_ratio_beta).expect("validated");
    let extra = (config.extra_episodes_mean > 0.0).then(|| Poisson::new(config.extra_episodes_mean).expect("validated"));
    let share = Gamma::new(2.0, 1.0).expect("constant");
    let e = &config.effects;

    let mut households = Vec::with_capacity(base.len());
    let mut episodes = Vec::new();
    for (mut h, social, religion) in base {
        if !rng.random_bool(config.p_any_spend) {
            households.push(h);
            continue;
        }
        let class = cuts.assign(&h) as usize;
        let mut effect = config.quintile_shift[class - 1];
        if h.sector == Sector::Rural {
            effect *= e.rural;
        }
        if matches!(social, SocialGroup::SC | SocialGroup::ST) {
            effect *= e.sc_st;
        }
        if religion == Religion::Muslim {
            effect *= e.muslim;
        }
        let target = (ratio.sample(&mut rng) * effect).min(1.0) * h.aexp;

        let n_episodes = 1 + extra.as_ref().map_or(0, |p| p.sample(&mut rng) as usize);
        struct Draft {
            care: CareType,
            facility: Facility,
            sex: Sex,
            chronic: bool,
            delivery: bool,
            weight: f64,
        }
        let drafts: Vec<Draft> = (0..n_episodes)
            .map(|_| {
                let care = if rng.random_bool(config.p_inpatient) { CareType::Inpatient } else { CareType::Outpatient };
                let facility = if rng.random_bool(config.p_private) { Facility::Private } else { Facility::Public };
                let sex = if rng.random_bool(config.p_female) { Sex::Female } else { Sex::Male };
                let chronic = rng.random_bool(config.p_chronic);
                let delivery = care == CareType::Inpatient && sex == Sex::Female && rng.random_bool(config.p_delivery);
                let mut weight = share.sample(&mut rng);
                if sex == Sex::Female {
                    weight *= e.female;
                }
                if facility == Facility::Public {
                    weight *= e.public_facility;
                }
                Draft { care, facility, sex, chronic, delivery, weight }
            })
            .collect();
        let weight_total: f64 = drafts.iter().map(|x| x.weight).sum();

        for (k, draft) in drafts.into_iter().enumerate() {
            let cost = target * draft.weight / weight_total;
            let shapes = component_shapes(draft.care);
            let raw: Vec<f64> = shapes.iter().map(|&s| Gamma::new(s, 1.0).expect("positive").sample(&mut rng)).collect();
            let raw_total: f64 = raw.iter().sum();
            let values: Vec<f64> = raw.iter().map(|r| round2(cost * r / raw_total)).collect();
            let costs = CostComponents::new(draft.care, values).expect("schema length");
            let total = costs.total();
            match draft.care {
                CareType::Inpatient => h.oop_inpatient += total,
                CareType::Outpatient => h.oop_outpatient += total,
            }
            episodes.push(EpisodeRecord {
                episode_id: format!("{}-{}", h.hh_id, k + 1),
                hh_id: h.hh_id.clone(),
                care_type: draft.care,
                facility: draft.facility,
                patient_sex: draft.sex,
                social_group: social,
                religion,
                chronic: draft.chronic,
                is_delivery: draft.delivery,
                costs,
                multiplier: 1.0,
            });
        }
        h.oop_inpatient = round2(h.oop_inpatient);
        h.oop_outpatient = round2(h.oop_outpatient);
        h.oop_total = round2(h.oop_inpatient + h.oop_outpatient);
        households.push(h);
    }
    (households, episodes)
}

/// Two disjoint stratified (by sector) simple random samples without
/// replacement of `n` households each, one per agency, with multiplier
/// N_h/n_h and subsamples split at random within each stratum. Records
/// come back in population order.
fn draw_samples(
    rng: &mut ChaCha8Rng,
    households: &[HouseholdRecord],
    episodes_by_hh: &BTreeMap<&str, Vec<&EpisodeRecord>>,
    n: usize,
) -> [(Vec<HouseholdRecord>, Vec<EpisodeRecord>); 2] {
    let strata: [Vec<usize>; 2] = [Sector::Rural, Sector::Urban]
        .map(|s| households.iter().enumerate().filter(|(_, h)| h.sector == s).map(|(i, _)| i).collect());
    let total = households.len();
    let room = strata.clone().map(|s| s.len() / 2);
    let mut sizes = strata.clone().map(|s| ((n * s.len()) as f64 / total as f64).round() as usize);
    for (size, &cap) in sizes.iter_mut().zip(&room) {
        *size = (*size).clamp(cap.min(2), cap);
    }
    // keep the district total at n where stratum sizes allow
    while sizes[0] + sizes[1] > n {
        let j = if sizes[0] >= sizes[1] { 0 } else { 1 };
        sizes[j] -= 1;
    }
    while sizes[0] + sizes[1] < n && (sizes[0] < room[0] || sizes[1] < room[1]) {
        let j = if room[0] - sizes[0] >= room[1] - sizes[1] { 0 } else { 1 };
        sizes[j] += 1;
    }

    let mut chosen: [Vec<(usize, f64, Subsample)>; 2] = [Vec::with_capacity(n), Vec::with_capacity(n)];
    for (stratum, &size) in strata.iter().zip(&sizes) {
        if size == 0 {
            continue;
        }
        let mut pool = stratum.clone();
        pool.shuffle(rng);
        let multiplier = stratum.len() as f64 / size as f64;
        for (k, picks) in pool.chunks(size).take(2).enumerate() {
            for (rank, &i) in picks.iter().enumerate() {
                let sub = if rank < size.div_ceil(2) { Subsample::S1 } else { Subsample::S2 };
                chosen[k].push((i, multiplier, sub));
            }
        }
    }

    [(Agency::Central, "C"), (Agency::State, "S")].map(|(agency, prefix)| {
        let k = if agency == Agency::Central { 0 } else { 1 };
        let mut picks = std::mem::take(&mut chosen[k]);
        picks.sort_by_key(|c| c.0);
        let mut hs = Vec::with_capacity(picks.len());
        let mut eps = Vec::new();
        for (i, multiplier, subsample) in picks {
            let src = &households[i];
            let id = format!("{prefix}-{}", src.hh_id);
            for e in episodes_by_hh.get(src.hh_id.as_str()).into_iter().flatten() {
                let mut e = (*e).clone();
                e.episode_id = format!("{prefix}-{}", e.episode_id);
                e.hh_id = id.clone();
                e.multiplier = multiplier;
                eps.push(e);
            }
            let mut h = src.clone();
            h.hh_id = id;
            h.agency = agency;
            h.subsample = subsample;
            h.multiplier = multiplier;
            hs.push(h);
        }
        (hs, eps)
    })
}

fn unweighted_gini(values: &mut [f64]) -> Option<f64> {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let sum: f64 = values.iter().sum();
    if values.is_empty() || sum <= 0.0 {
        return None;
    }
    let s: f64 = values.iter().enumerate().map(|(i, y)| (2.0 * (i as f64 + 1.0) - n - 1.0) * y).sum();
    Some(s / (n * sum))
}

fn compute_truth(
    config: &SynthConfig,
    households: &[HouseholdRecord],
    episodes: &[EpisodeRecord],
    cuts: &QuintileCuts,
) -> SynthTruth {
    let thresholds = config.truth_thresholds.clone();
    let rate = |hs: &mut dyn Iterator<Item = &HouseholdRecord>| -> Vec<f64> {
        let mut hits = vec![0usize; thresholds.len()];
        let mut n = 0usize;
        for h in hs.filter(|h| h.aexp > 0.0) {
            n += 1;
            for (hit, &t) in hits.iter_mut().zip(&thresholds) {
                if h.oop_total / h.aexp >= t {
                    *hit += 1;
                }
            }
        }
        hits.iter().map(|&k| if n == 0 { 0.0 } else { k as f64 / n as f64 }).collect()
    };

    let mut che_by_district = BTreeMap::new();
    for d in households.iter().map(|h| h.district).collect::<std::collections::BTreeSet<_>>() {
        che_by_district.insert(d.code(), rate(&mut households.iter().filter(|h| h.district == d)));
    }
    let che_by_quintile = (1..=5u8)
        .map(|q| rate(&mut households.iter().filter(|h| cuts.class_of(h.aexp / h.hh_size as f64) == q)))
        .collect();

    let persons: f64 = households.iter().map(|h| h.hh_size as f64).sum();
    let covered: f64 = households.iter().filter(|h| h.coverage).map(|h| h.hh_size as f64).sum();

    let private_ip = |e: &&EpisodeRecord| e.care_type == CareType::Inpatient && e.facility == Facility::Private;
    let mut costs: Vec<f64> = episodes.iter().filter(private_ip).map(|e| e.costs.values().iter().sum()).collect();
    let mean_by = |sex: Sex| {
        let xs: Vec<f64> =
            episodes.iter().filter(private_ip).filter(|e| e.patient_sex == sex).map(|e| e.costs.values().iter().sum()).collect();
        (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
    };

    SynthTruth {
        households: households.len(),
        episodes: episodes.len(),
        che_incidence: rate(&mut households.iter()),
        thresholds,
        che_by_district,
        che_by_quintile,
        quintile_cuts: cuts.cuts,
        coverage_rate: covered / persons,
        mean_private_inpatient_by_sex: [mean_by(Sex::Male), mean_by(Sex::Female)],
        gini_private_inpatient: unweighted_gini(&mut costs),
    }
}

/// Generates the population, the two agency samples and the truth.
/// Deterministic in the config.
pub fn generate(config: &SynthConfig) -> Result<SynthOutput, SynthError> {
    config.validate()?;
    let districts = config.district_list()?;

    let base: Vec<_> = districts.par_iter().map(|&d| base_households(config, d)).collect();
    let all_base: Vec<&HouseholdRecord> = base.iter().flatten().map(|(h, _, _)| h).collect();
    let cuts = quintile_cuts(&all_base, QuintileBasis::PersonWeighted)
        .map_err(|e| SynthError::InvalidConfig(format!("population quintiles: {e}")))?;

    let populated: Vec<(Vec<HouseholdRecord>, Vec<EpisodeRecord>)> =
        districts.par_iter().zip(base).map(|(&d, b)| add_spending(config, d, b, &cuts)).collect();

    let samples: Vec<[(Vec<HouseholdRecord>, Vec<EpisodeRecord>); 2]> = districts
        .par_iter()
        .zip(&populated)
        .map(|(&d, (hs, eps))| {
            let mut by_hh: BTreeMap<&str, Vec<&EpisodeRecord>> = BTreeMap::new();
            for e in eps {
                by_hh.entry(e.hh_id.as_str()).or_default().push(e);
            }
            draw_samples(&mut rng_for(config.seed, d, STREAM_SAMPLE), hs, &by_hh, config.households_per_agency)
        })
        .collect();

    let mut central = (Vec::new(), Vec::new());
    let mut state = (Vec::new(), Vec::new());
    for [c, s] in samples {
        central.0.extend(c.0);
        central.1.extend(c.1);
        state.0.extend(s.0);
        state.1.extend(s.1);
    }
    let mut pop = (Vec::new(), Vec::new());
    for (hs, eps) in populated {
        pop.0.extend(hs);
        pop.1.extend(eps);
    }

    let truth = compute_truth(config, &pop.0, &pop.1, &cuts);
    Ok(SynthOutput {
        population: SurveyDataset::new("population", pop.0, pop.1),
        central: SurveyDataset::new("central", central.0, central.1),
        state: SurveyDataset::new("state", state.0, state.1),
        truth,
    })
}

/// File names written by [`write_output`].
pub const CENTRAL_HOUSEHOLDS: &str = "central_households.csv";
pub const CENTRAL_EPISODES: &str = "central_episodes.csv";
pub const STATE_HOUSEHOLDS: &str = "state_households.csv";
pub const STATE_EPISODES: &str = "state_episodes.csv";
pub const TRUTH_JSON: &str = "truth.json";

/// Writes both agency samples as household/episode CSV pairs plus the
/// truth as JSON.
pub fn write_output(output: &SynthOutput, dir: &Path) -> Result<(), SynthError> {
    std::fs::create_dir_all(dir)?;
    let create = |name: &str| -> Result<BufWriter<File>, SynthError> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
    write_households(create(CENTRAL_HOUSEHOLDS)?, &output.central.households)?;
    write_episodes(create(CENTRAL_EPISODES)?, &output.central.episodes)?;
    write_households(create(STATE_HOUSEHOLDS)?, &output.state.households)?;
    write_episodes(create(STATE_EPISODES)?, &output.state.episodes)?;
    serde_json::to_writer_pretty(create(TRUTH_JSON)?, &output.truth)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::validate_dataset;

    fn small() -> SynthConfig {
        SynthConfig { districts: vec![1, 2], population_per_district: 2_000, households_per_agency: 200, ..Default::default() }
    }

    #[test]
    fn deterministic() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.central.households, b.central.households);
        assert_eq!(a.state.episodes, b.state.episodes);
        assert_eq!(a.truth, b.truth);
        let mut other = small();
        other.seed = 7;
        assert_ne!(generate(&other).unwrap().central.households, a.central.households);
    }

    #[test]
    fn samples_are_valid_and_weighted() {
        let out = generate(&small()).unwrap();
        for d in [&out.population, &out.central, &out.state] {
            let report = validate_dataset(d);
            assert!(report.is_valid(), "{:?}", &report.violations[..report.violations.len().min(3)]);
        }
        assert_eq!(out.central.households.len(), 400);
        assert_eq!(out.state.households.len(), 400);
        // weights sum to the population size per district
        let total: f64 = out.central.households.iter().map(|h| h.multiplier).sum();
        assert!((total - 4_000.0).abs() < 1e-9);
        assert!(out.central.households.iter().any(|h| h.subsample == Subsample::S2));
        assert!(out.central.households.iter().all(|h| h.agency == Agency::Central && h.hh_id.starts_with("C-")));
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            SynthConfig { pce_log_sd: 0.0, ..small() },
            SynthConfig { p_rural: 1.5, ..small() },
            SynthConfig { districts: vec![20], ..small() },
            SynthConfig { households_per_agency: 5_000, ..small() },
            SynthConfig { p_social: [0.5, 0.5, 0.5], ..small() },
        ];
        for c in bad {
            assert!(matches!(generate(&c), Err(SynthError::InvalidConfig(_))));
        }
    }

    #[test]
    fn truth_thresholds_ordered() {
        let t = generate(&small()).unwrap().truth;
        assert!(t.che_incidence.windows(2).all(|w| w[0] >= w[1]));
        assert!(t.gini_private_inpatient.is_some());
    }
}
