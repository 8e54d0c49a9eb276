use cheq::data_model::*;
use cheq::estimation::*;
use rand::Rng;

use super::{episode, household};

fn same<T: PartialEq + std::fmt::Debug>(got: T, expected: T, what: &str) -> Result<(), String> {
    if got == expected {
        Ok(())
    } else {
        Err(format!("{what}: {got:?} vs {expected:?}"))
    }
}

/// Small dataset with integer money and weights, so every weighted sum is
/// exact in floating point.
pub fn integer_dataset(rng: &mut impl Rng, n: usize) -> SurveyDataset {
    let mut households = Vec::new();
    let mut episodes = Vec::new();
    for i in 0..n {
        let sector = if rng.random_bool(0.5) { Sector::Rural } else { Sector::Urban };
        let subsample = if i % 2 == 0 { Subsample::S1 } else { Subsample::S2 };
        let mut h = household(&format!("h{i}"), rng.random_range(1..=3), sector, subsample);
        h.multiplier = rng.random_range(1..=50) as f64;
        h.hh_size = rng.random_range(1..=6);
        h.aexp = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(1..=1000) as f64 };
        h.coverage = rng.random_bool(0.3);
        for k in 0..rng.random_range(0..=2) {
            let care = if rng.random_bool(0.5) { CareType::Inpatient } else { CareType::Outpatient };
            let costs = care.components().iter().map(|_| rng.random_range(0..=200) as f64).collect();
            let mut e = episode(&format!("h{i}-{k}"), &h, care, costs);
            e.multiplier = rng.random_range(1..=50) as f64;
            e.is_delivery = rng.random_bool(0.3);
            e.facility = if rng.random_bool(0.5) { Facility::Public } else { Facility::Private };
            h.oop_total += e.total_cost();
            episodes.push(e);
        }
        h.oop_total += rng.random_range(0..=300) as f64;
        households.push(h);
    }
    SurveyDataset::new("small", households, episodes)
}

pub fn ratio(hit: i64, total: i64) -> Option<f64> {
    (total > 0).then(|| hit as f64 / total as f64)
}

pub fn che_oracle(hs: &[&HouseholdRecord], percent: i64) -> Option<f64> {
    let (mut hit, mut total) = (0, 0);
    for h in hs.iter().filter(|h| h.aexp > 0.0) {
        let w = h.multiplier as i64;
        total += w;
        if 100 * h.oop_total as i64 >= percent * h.aexp as i64 {
            hit += w;
        }
    }
    ratio(hit, total)
}

pub fn coverage_oracle(hs: &[&HouseholdRecord]) -> Option<f64> {
    let (mut hit, mut total) = (0, 0);
    for h in hs {
        let w = h.multiplier as i64 * h.hh_size as i64;
        total += w;
        if h.coverage {
            hit += w;
        }
    }
    ratio(hit, total)
}

/// Quintile class by counting, for each cut probability k/5, whether
/// persons at or below the household's own value are still short of it.
pub fn quintile_oracle(hs: &[&HouseholdRecord]) -> Option<Vec<u8>> {
    let pw = |h: &HouseholdRecord| h.multiplier as i64 * h.hh_size as i64;
    let total: i64 = hs.iter().map(|h| pw(h)).sum();
    let pce: Vec<f64> = hs.iter().map(|h| h.per_capita_expenditure()).collect();
    if hs.len() < 5 || pce.iter().all(|&x| x == pce[0]) {
        return None;
    }
    // cut k = smallest value whose cumulative person weight reaches k/5
    let mut cuts = Vec::new();
    for k in 1..=4 {
        let cut = pce
            .iter()
            .copied()
            .filter(|&x| {
                let below: i64 = hs.iter().zip(&pce).filter(|(_, &y)| y <= x).map(|(h, _)| pw(h)).sum();
                5 * below >= k * total
            })
            .fold(f64::INFINITY, f64::min);
        cuts.push(cut);
    }
    Some(pce.iter().map(|&x| 1 + cuts.iter().filter(|&&c| x > c).count() as u8).collect())
}

pub fn share_oracle(eps: &[&EpisodeRecord], care: CareType) -> Option<Vec<f64>> {
    let eps: Vec<_> = eps.iter().filter(|e| e.care_type == care).collect();
    if eps.is_empty() {
        return None;
    }
    let sums: Vec<i64> = (0..care.components().len())
        .map(|c| eps.iter().map(|e| e.multiplier as i64 * e.costs.values()[c] as i64).sum())
        .collect();
    let total: i64 = sums.iter().sum();
    (total > 0).then(|| sums.iter().map(|&s| s as f64 / total as f64).collect())
}

pub fn delivery_oracle(eps: &[&EpisodeRecord]) -> Option<f64> {
    let (mut hit, mut total) = (0, 0);
    for e in eps.iter().filter(|e| e.is_delivery) {
        total += e.multiplier as i64;
        if e.facility == Facility::Public {
            hit += e.multiplier as i64;
        }
    }
    ratio(hit, total)
}

pub fn se_oracle(f: impl Fn(Subsample) -> Option<f64>) -> Option<f64> {
    Some((f(Subsample::S1)? - f(Subsample::S2)?).abs() / 2.0)
}

/// Compares every estimator on `d` with the oracles above, exactly.
/// Returns the first mismatch.
pub fn check_against_enumeration(d: &SurveyDataset) -> Result<(), String> {
    let hs: Vec<&HouseholdRecord> = d.households.iter().collect();
    let domains = [
        Domain::ALL,
        Domain::sector(Sector::Rural),
        Domain::district(District::new(2).unwrap()),
        Domain { district: District::new(3), sector: Some(Sector::Urban) },
    ];
    for domain in &domains {
        let members: Vec<&HouseholdRecord> = hs.iter().copied().filter(|h| domain.contains(h)).collect();
        let half = |s: Subsample| -> Vec<&HouseholdRecord> { members.iter().copied().filter(|h| h.subsample == s).collect() };

        for (t, percent) in [(0.1, 10), (0.2, 20), (0.4, 40)] {
            match (estimate_che(&d.households, t, domain), che_oracle(&members, percent)) {
                (Ok(e), Some(p)) => {
                    same(e.incidence, p, "che")?;
                    same(e.se, se_oracle(|s| che_oracle(&half(s), percent)), "che se")?;
                    same(e.excluded, members.iter().filter(|h| h.aexp == 0.0).count(), "excluded")?;
                }
                (Err(_), None) => {}
                (e, p) => return Err(format!("{domain} {t}: {e:?} vs {p:?}")),
            }
        }

        match (coverage_rate(&d.households, domain), coverage_oracle(&members)) {
            (Ok(e), Some(p)) => {
                same(e.estimate, p, "coverage")?;
                same(e.se, se_oracle(|s| coverage_oracle(&half(s))), "coverage se")?;
            }
            (Err(_), None) => {}
            (e, p) => return Err(format!("coverage {domain}: {e:?} vs {p:?}")),
        }

        let episodes_of = |keep: &dyn Fn(&HouseholdRecord) -> bool| -> Vec<&EpisodeRecord> {
            d.episodes
                .iter()
                .filter(|e| hs.iter().any(|h| h.hh_id == e.hh_id && domain.contains(h) && keep(h)))
                .collect()
        };
        let eps = episodes_of(&|_| true);
        for care in [CareType::Inpatient, CareType::Outpatient] {
            match (component_share_estimates(d, care, domain), share_oracle(&eps, care)) {
                (Ok(shares), Some(expected)) => {
                    let s1 = share_oracle(&episodes_of(&|h| h.subsample == Subsample::S1), care);
                    let s2 = share_oracle(&episodes_of(&|h| h.subsample == Subsample::S2), care);
                    for (i, s) in shares.iter().enumerate() {
                        same(s.share, expected[i], "share")?;
                        let se = s1.as_ref().zip(s2.as_ref()).map(|(a, b)| (a[i] - b[i]).abs() / 2.0);
                        same(s.se, se, "share se")?;
                    }
                }
                (Err(_), None) => {}
                (e, p) => return Err(format!("shares {domain} {care}: {e:?} vs {p:?}")),
            }
        }

        match (public_delivery_share(d, domain), delivery_oracle(&eps)) {
            (Ok(e), Some(p)) => same(e.estimate, p, "delivery")?,
            (Err(_), None) => {}
            (e, p) => return Err(format!("delivery {domain}: {e:?} vs {p:?}")),
        }
    }

    match (assign_quintiles(&d.households, QuintileBasis::PersonWeighted), quintile_oracle(&hs)) {
        (Ok((classes, Some(_))), Some(expected)) => same(classes, expected, "quintiles")?,
        (Ok((classes, None)), None) if hs.len() >= 5 => same(classes, vec![1; hs.len()], "quintiles")?,
        (Err(_), None) => {}
        (r, p) => return Err(format!("quintiles: {r:?} vs {p:?}")),
    }
    Ok(())
}
