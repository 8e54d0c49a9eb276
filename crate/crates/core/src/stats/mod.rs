//! Inferential utilities: Spearman rank correlation, Welch's t-test and
//! normal-approximation confidence intervals for a mean across districts.

pub mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("input is constant; correlation is undefined")]
    ConstantInput,
    #[error("both samples have zero variance")]
    ZeroVariance,
    #[error("input contains a non-finite value")]
    NonFinite,
}

/// Confidence level with a fixed two-sided normal quantile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConfidenceLevel {
    #[serde(rename = "90")]
    Ninety,
    #[serde(rename = "95")]
    NinetyFive,
    #[serde(rename = "99")]
    NinetyNine,
}

impl ConfidenceLevel {
    pub fn z(self) -> f64 {
        match self {
            ConfidenceLevel::Ninety => 1.645,
            ConfidenceLevel::NinetyFive => 1.960,
            ConfidenceLevel::NinetyNine => 2.576,
        }
    }

    pub fn percent(self) -> u32 {
        match self {
            ConfidenceLevel::Ninety => 90,
            ConfidenceLevel::NinetyFive => 95,
            ConfidenceLevel::NinetyNine => 99,
        }
    }

    pub fn from_percent(p: u32) -> Option<Self> {
        match p {
            90 => Some(ConfidenceLevel::Ninety),
            95 => Some(ConfidenceLevel::NinetyFive),
            99 => Some(ConfidenceLevel::NinetyNine),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub n: usize,
    pub t_stat: f64,
    pub p_two_sided: f64,
}

/// Raw correlation and the variant with the second input's direction
/// reversed, for measures where a high value of one means "good" and a
/// high value of the other means "bad".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedCorrelation {
    pub raw: CorrelationResult,
    pub aligned: CorrelationResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    pub p_two_sided: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanInterval {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

fn check_finite(xs: &[f64]) -> Result<(), StatsError> {
    if xs.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

/// Ranks starting at 1, ties receive the average of the ranks they span.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// t statistic and two-sided p for a correlation coefficient on `n` pairs,
/// using the Student-t approximation with n - 2 degrees of freedom.
pub fn correlation_significance(rho: f64, n: usize) -> (f64, f64) {
    let df = (n - 2) as f64;
    let denom = 1.0 - rho * rho;
    if denom <= 0.0 {
        let t = if rho > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        return (t, 0.0);
    }
    let t = rho * (df / denom).sqrt();
    (t, special::student_t_two_sided_p(t, df))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFewObservations { needed: 3, got: x.len() });
    }
    check_finite(x)?;
    check_finite(y)?;
    let rho = pearson(&average_ranks(x), &average_ranks(y)).ok_or(StatsError::ConstantInput)?;
    let (t_stat, p_two_sided) = correlation_significance(rho, x.len());
    Ok(CorrelationResult { rho, n: x.len(), t_stat, p_two_sided })
}

/// Spearman correlation reported both as-is and with `y` reversed.
pub fn spearman_aligned(x: &[f64], y: &[f64]) -> Result<AlignedCorrelation, StatsError> {
    let raw = spearman(x, y)?;
    let flipped: Vec<f64> = y.iter().map(|v| -v).collect();
    let aligned = spearman(x, &flipped)?;
    Ok(AlignedCorrelation { raw, aligned })
}

/// Welch's unequal-variance two-sample t-test with Satterthwaite degrees
/// of freedom.
pub fn welch_t(x: &[f64], y: &[f64]) -> Result<TTestResult, StatsError> {
    for s in [x, y] {
        if s.len() < 2 {
            return Err(StatsError::TooFewObservations { needed: 2, got: s.len() });
        }
        check_finite(s)?;
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (vx, vy) = (sample_variance(x) / nx, sample_variance(y) / ny);
    let diff = mean(x) - mean(y);
    if vx + vy == 0.0 {
        if diff == 0.0 {
            return Err(StatsError::ZeroVariance);
        }
        let t = diff.signum() * f64::INFINITY;
        return Ok(TTestResult { t, df: nx + ny - 2.0, p_two_sided: 0.0 });
    }
    let t = diff / (vx + vy).sqrt();
    let df = (vx + vy).powi(2) / (vx * vx / (nx - 1.0) + vy * vy / (ny - 1.0));
    Ok(TTestResult { t, df, p_two_sided: special::student_t_two_sided_p(t, df) })
}

/// Mean with a normal-approximation interval, mean ± z·sd/√n, sd with an
/// n − 1 denominator.
pub fn across_district_ci(values: &[f64], level: ConfidenceLevel) -> Result<MeanInterval, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFewObservations { needed: 2, got: values.len() });
    }
    check_finite(values)?;
    let m = mean(values);
    let half = level.z() * (sample_variance(values) / values.len() as f64).sqrt();
    Ok(MeanInterval { mean: m, lo: m - half, hi: m + half })
}
