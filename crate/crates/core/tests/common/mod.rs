#![allow(dead_code)]

pub mod enumeration;

use std::path::PathBuf;

use cheq::data_model::*;
use cheq::estimation::{
    che_by_quintile, component_share_estimates, coverage_rate, estimate_che, public_delivery_share, Domain,
    DEFAULT_THRESHOLDS,
};
use cheq::inequality::{district_decomposition_table, DecompositionMode, GiniTableOptions, ValueSelector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixtures() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures"))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// O(n²) weighted Gini: Σᵢ Σⱼ wᵢwⱼ|yᵢ − yⱼ| / (2 W² μ).
pub fn pairwise_gini(values: &[f64], weights: &[f64]) -> f64 {
    let w: f64 = weights.iter().sum();
    let mean = values.iter().zip(weights).map(|(y, w)| y * w).sum::<f64>() / w;
    let mut acc = 0.0;
    for (yi, wi) in values.iter().zip(weights) {
        for (yj, wj) in values.iter().zip(weights) {
            acc += wi * wj * (yi - yj).abs();
        }
    }
    acc / (2.0 * w * w * mean)
}

pub fn household(id: &str, district: u8, sector: Sector, subsample: Subsample) -> HouseholdRecord {
    HouseholdRecord {
        hh_id: id.to_string(),
        district: District::new(district).unwrap(),
        sector,
        agency: Agency::Central,
        subsample,
        stratum_id: format!("{district}-{sector}"),
        multiplier: 1.0,
        hh_size: 1,
        aexp: 1000.0,
        oop_total: 0.0,
        oop_inpatient: 0.0,
        oop_outpatient: 0.0,
        coverage: false,
    }
}

pub fn episode(id: &str, hh: &HouseholdRecord, care_type: CareType, costs: Vec<f64>) -> EpisodeRecord {
    EpisodeRecord {
        episode_id: id.to_string(),
        hh_id: hh.hh_id.clone(),
        care_type,
        facility: Facility::Private,
        patient_sex: Sex::Male,
        social_group: SocialGroup::Others,
        religion: Religion::Others,
        chronic: false,
        is_delivery: false,
        costs: CostComponents::new(care_type, costs).unwrap(),
        multiplier: hh.multiplier,
    }
}

/// Valid random dataset over `districts`, with both subsamples and sectors
/// represented and money rounded to cents.
pub fn random_dataset(rng: &mut impl Rng, n_households: usize, districts: &[u8], agency: Agency) -> SurveyDataset {
    let tag = if agency == Agency::Central { "c" } else { "s" };
    let mut households = Vec::with_capacity(n_households);
    let mut episodes = Vec::new();
    for i in 0..n_households {
        let district = districts[i % districts.len()];
        let sector = if (i / districts.len()) % 2 == 0 { Sector::Rural } else { Sector::Urban };
        let subsample = if (i / (2 * districts.len())) % 2 == 0 { Subsample::S1 } else { Subsample::S2 };
        let mut h = household(&format!("{tag}{i:05}"), district, sector, subsample);
        h.agency = agency;
        h.multiplier = (rng.random_range(1.0..500.0f64) * 100.0).round() / 100.0;
        h.hh_size = rng.random_range(1..=9);
        h.aexp = (rng.random_range(2_000.0..400_000.0f64) * 100.0).round() / 100.0;
        if rng.random_bool(0.03) {
            h.aexp = 0.0;
        }
        h.coverage = rng.random_bool(0.2);

        let n_eps = if rng.random_bool(0.5) { rng.random_range(1..=3) } else { 0 };
        for k in 0..n_eps {
            let care = if rng.random_bool(0.5) { CareType::Inpatient } else { CareType::Outpatient };
            let costs: Vec<f64> = care
                .components()
                .iter()
                .map(|_| if rng.random_bool(0.3) { 0.0 } else { (rng.random_range(0.0..20_000.0f64) * 100.0).round() / 100.0 })
                .collect();
            let mut e = episode(&format!("{}-{k}", h.hh_id), &h, care, costs);
            e.facility = if rng.random_bool(0.6) { Facility::Private } else { Facility::Public };
            e.patient_sex = if rng.random_bool(0.5) { Sex::Female } else { Sex::Male };
            e.social_group = SocialGroup::ALL[rng.random_range(0..4)];
            e.religion = if rng.random_bool(0.3) { Religion::Muslim } else { Religion::Others };
            e.chronic = rng.random_bool(0.2);
            e.is_delivery = care == CareType::Inpatient && rng.random_bool(0.15);
            match care {
                CareType::Inpatient => h.oop_inpatient += e.total_cost(),
                CareType::Outpatient => h.oop_outpatient += e.total_cost(),
            }
            episodes.push(e);
        }
        h.oop_inpatient = (h.oop_inpatient * 100.0).round() / 100.0;
        h.oop_outpatient = (h.oop_outpatient * 100.0).round() / 100.0;
        let other = rng.random_range(0.0..2_000.0f64);
        h.oop_total = ((h.oop_inpatient + h.oop_outpatient + other) * 100.0).round() / 100.0;
        households.push(h);
    }
    SurveyDataset::new(agency.to_string().to_lowercase(), households, episodes)
}

fn push(out: &mut Vec<(String, f64)>, name: String, v: Option<f64>) {
    if let Some(v) = v {
        out.push((name, v));
    }
}

/// Every number the estimators and the Gini table emit for `dataset`,
/// keyed by a stable name. Missing cells are skipped.
pub fn emitted_statistics(dataset: &SurveyDataset) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    let hs = &dataset.households;
    let mut domains = vec![Domain::ALL, Domain::sector(Sector::Rural), Domain::sector(Sector::Urban)];
    let mut districts: Vec<District> = hs.iter().map(|h| h.district).collect();
    districts.sort();
    districts.dedup();
    domains.extend(districts.iter().map(|&d| Domain::district(d)));

    for domain in &domains {
        for &t in &DEFAULT_THRESHOLDS {
            if let Ok(e) = estimate_che(hs, t, domain) {
                push(&mut out, format!("che {domain} {t}"), Some(e.incidence));
                push(&mut out, format!("che se {domain} {t}"), e.se);
            }
        }
        if let Ok(c) = coverage_rate(hs, domain) {
            push(&mut out, format!("coverage {domain}"), Some(c.estimate));
            push(&mut out, format!("coverage se {domain}"), c.se);
        }
        if let Ok(p) = public_delivery_share(dataset, domain) {
            push(&mut out, format!("public delivery {domain}"), Some(p.estimate));
            push(&mut out, format!("public delivery se {domain}"), p.se);
        }
        for care in [CareType::Inpatient, CareType::Outpatient] {
            if let Ok(shares) = component_share_estimates(dataset, care, domain) {
                for s in shares {
                    push(&mut out, format!("share {domain} {care} {}", s.component), Some(s.share));
                    push(&mut out, format!("share se {domain} {care} {}", s.component), s.se);
                }
            }
        }
    }

    if let Ok(q) = che_by_quintile(hs, &DEFAULT_THRESHOLDS) {
        for (class, row) in q.rows.iter().enumerate() {
            for (k, e) in row.iter().enumerate() {
                if let Some(e) = e {
                    push(&mut out, format!("che q{} {k}", class + 1), Some(e.incidence));
                    push(&mut out, format!("che se q{} {k}", class + 1), e.se);
                }
            }
        }
        if let Some(c) = q.cuts {
            for (k, cut) in c.cuts.iter().enumerate() {
                push(&mut out, format!("cut {k}"), Some(*cut));
            }
        }
    }

    let groupings = [GroupingSpec::sex(), GroupingSpec::sector(), GroupingSpec::social(), GroupingSpec::religion()];
    for mode in [DecompositionMode::SignedTwoGroup, DecompositionMode::StrictPyatt] {
        for selector in [ValueSelector::OopPrivateInpatient, ValueSelector::OopAll] {
            let options = GiniTableOptions { mode, selector, ..Default::default() };
            let Ok(table) = district_decomposition_table(dataset, &groupings, &options) else { continue };
            for row in &table.rows {
                let key = format!("gini {mode:?} {selector:?} {}", row.label);
                push(&mut out, key.clone(), row.total);
                for cell in &row.cells {
                    if let Some(d) = &cell.decomposition {
                        for (part, v) in [
                            ("between", d.between),
                            ("within", d.within),
                            ("overlap", d.overlap),
                            // percent shares compared as fractions of the total
                            ("between share", d.between_share / 100.0),
                            ("within share", d.within_share / 100.0),
                            ("overlap share", d.overlap_share / 100.0),
                        ] {
                            push(&mut out, format!("{key} {} {part}", cell.grouping), Some(v));
                        }
                    }
                    push(&mut out, format!("{key} {} between se", cell.grouping), cell.between_se);
                }
            }
        }
    }
    out
}

/// Largest absolute difference between two statistic lists, which must
/// name the same statistics in the same order, and the statistic where it
/// occurs.
pub fn max_statistic_gap(a: &[(String, f64)], b: &[(String, f64)]) -> Result<(f64, String), String> {
    if a.len() != b.len() {
        return Err(format!("{} statistics vs {}", a.len(), b.len()));
    }
    let mut worst = (0.0, String::new());
    for ((ka, va), (kb, vb)) in a.iter().zip(b) {
        if ka != kb {
            return Err(format!("'{ka}' vs '{kb}'"));
        }
        let gap = (va - vb).abs();
        if gap > worst.0 {
            worst = (gap, ka.clone());
        }
    }
    Ok(worst)
}

pub fn scale_weights(dataset: &SurveyDataset, c: f64) -> SurveyDataset {
    let mut d = dataset.clone();
    d.households.iter_mut().for_each(|h| h.multiplier *= c);
    d.episodes.iter_mut().for_each(|e| e.multiplier *= c);
    d
}

/// Every household and episode twice, the copies under fresh ids.
pub fn duplicate_records(dataset: &SurveyDataset) -> SurveyDataset {
    let mut d = dataset.clone();
    for h in &dataset.households {
        let mut h = h.clone();
        h.hh_id.push_str("#2");
        d.households.push(h);
    }
    for e in &dataset.episodes {
        let mut e = e.clone();
        e.hh_id.push_str("#2");
        e.episode_id.push_str("#2");
        d.episodes.push(e);
    }
    d
}
