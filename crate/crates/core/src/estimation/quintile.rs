use std::borrow::Borrow;

use serde::{Deserialize, Serialize};

use super::EstimationError;
use crate::data_model::HouseholdRecord;

pub const QUINTILE_PROBS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

/// Relative slack on the cumulative-weight comparison, absorbing
/// summation rounding.
const CUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuintileBasis {
    /// multiplier × household size
    PersonWeighted,
    /// multiplier
    HouseholdWeighted,
}

impl QuintileBasis {
    fn weight(self, h: &HouseholdRecord) -> f64 {
        match self {
            QuintileBasis::PersonWeighted => h.person_weight(),
            QuintileBasis::HouseholdWeighted => h.multiplier,
        }
    }
}

/// Per-capita expenditure cut points between quintile classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuintileCuts {
    pub cuts: [f64; 4],
    pub basis: QuintileBasis,
}

impl QuintileCuts {
    /// Class 1 (poorest) to 5. A value equal to a cut falls in the lower
    /// class.
    pub fn class_of(&self, per_capita: f64) -> u8 {
        1 + self.cuts.iter().filter(|&&c| per_capita > c).count() as u8
    }

    pub fn assign(&self, h: &HouseholdRecord) -> u8 {
        self.class_of(h.per_capita_expenditure())
    }
}

/// Weighted quantiles at 0.2, 0.4, 0.6 and 0.8 of per-capita expenditure:
/// each cut is the smallest value whose cumulative weight share reaches
/// the probability.
pub fn quintile_cuts<H: Borrow<HouseholdRecord>>(
    households: &[H],
    basis: QuintileBasis,
) -> Result<QuintileCuts, EstimationError> {
    let mut points: Vec<(f64, f64)> = households
        .iter()
        .map(Borrow::borrow)
        .map(|h| (h.per_capita_expenditure(), basis.weight(h)))
        .filter(|(_, w)| *w > 0.0)
        .collect();
    if points.len() < 5 {
        return Err(EstimationError::TooFewHouseholds { needed: 5, got: points.len() });
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    if points[0].0 == points[points.len() - 1].0 {
        return Err(EstimationError::DegenerateDistribution);
    }
    let total: f64 = points.iter().map(|p| p.1).sum();

    let mut cuts = [0.0; 4];
    let mut k = 0;
    let mut cumulative = 0.0;
    for &(x, w) in &points {
        cumulative += w;
        while k < 4 && cumulative >= QUINTILE_PROBS[k] * total * (1.0 - CUM_TOLERANCE) {
            cuts[k] = x;
            k += 1;
        }
        if k == 4 {
            break;
        }
    }
    Ok(QuintileCuts { cuts, basis })
}

/// Quintile class per household, in input order. A degenerate distribution
/// puts everyone in class 1 and returns no cuts.
pub fn assign_quintiles<H: Borrow<HouseholdRecord>>(
    households: &[H],
    basis: QuintileBasis,
) -> Result<(Vec<u8>, Option<QuintileCuts>), EstimationError> {
    match quintile_cuts(households, basis) {
        Ok(cuts) => Ok((households.iter().map(|h| cuts.assign(h.borrow())).collect(), Some(cuts))),
        Err(EstimationError::DegenerateDistribution) => {
            log::warn!("all per-capita expenditures are equal; assigning every household to quintile 1");
            Ok((vec![1; households.len()], None))
        }
        Err(e) => Err(e),
    }
}
