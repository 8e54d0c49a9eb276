use serde::{Deserialize, Serialize};

use super::PoolingError;
use crate::stats::special::{chi_square_sf, normal_two_sided_p};

/// Smallest combined sample accepted by the runs test's normal
/// approximation.
pub const MIN_RUNS_OBSERVATIONS: usize = 10;

/// Minimum expected cell count after bin merging.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunsTest {
    pub z: f64,
    pub p: f64,
    pub runs: usize,
    pub n_a: usize,
    pub n_b: usize,
    /// Observations sitting in a block of equal values that contains both
    /// samples. Such blocks are ordered with sample `a` first.
    pub ties_across: usize,
}

fn check_finite(xs: &[f64]) -> Result<(), PoolingError> {
    if xs.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(PoolingError::NonFinite)
    }
}

/// Wald–Wolfowitz runs test with the normal approximation.
pub fn runs_test(a: &[f64], b: &[f64]) -> Result<RunsTest, PoolingError> {
    check_finite(a)?;
    check_finite(b)?;
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 {
        return Err(PoolingError::TooFewObservations { needed: 1, got: n1.min(n2) });
    }
    if n1 + n2 < MIN_RUNS_OBSERVATIONS {
        return Err(PoolingError::TooFewObservations { needed: MIN_RUNS_OBSERVATIONS, got: n1 + n2 });
    }

    let mut merged: Vec<(f64, u8)> = a.iter().map(|&v| (v, 0)).chain(b.iter().map(|&v| (v, 1))).collect();
    merged.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

    let runs = 1 + merged.windows(2).filter(|w| w[0].1 != w[1].1).count();

    let mut ties_across = 0;
    let mut i = 0;
    while i < merged.len() {
        let mut j = i + 1;
        while j < merged.len() && merged[j].0 == merged[i].0 {
            j += 1;
        }
        if merged[i].1 != merged[j - 1].1 {
            ties_across += j - i;
        }
        i = j;
    }
    if ties_across > 0 {
        log::warn!("runs test: {ties_across} observations tied across samples; ordered first-sample first");
    }

    let (f1, f2) = (n1 as f64, n2 as f64);
    let n = f1 + f2;
    let mean = 2.0 * f1 * f2 / n + 1.0;
    let var = 2.0 * f1 * f2 * (2.0 * f1 * f2 - f1 - f2) / (n * n * (n - 1.0));
    let z = (runs as f64 - mean) / var.sqrt();
    Ok(RunsTest { z, p: normal_two_sided_p(z), runs, n_a: n1, n_b: n2, ties_across })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub stat: f64,
    pub df: usize,
    pub p: f64,
    /// Column totals of the bins used, after merging.
    pub bin_counts: Vec<usize>,
}

/// Pearson chi-square on an r × c table of counts, df = (r−1)(c−1).
pub fn pearson_chi_square(table: &[Vec<f64>]) -> Result<(f64, usize, f64), PoolingError> {
    let r = table.len();
    let c = table.first().map_or(0, Vec::len);
    if r < 2 || c < 2 || table.iter().any(|row| row.len() != c) {
        return Err(PoolingError::BadTable);
    }
    let row_totals: Vec<f64> = table.iter().map(|row| row.iter().sum()).collect();
    let col_totals: Vec<f64> = (0..c).map(|j| table.iter().map(|row| row[j]).sum()).collect();
    let n: f64 = row_totals.iter().sum();
    if n <= 0.0 {
        return Err(PoolingError::BadTable);
    }
    let mut stat = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &observed) in row.iter().enumerate() {
            let expected = row_totals[i] * col_totals[j] / n;
            if expected > 0.0 {
                stat += (observed - expected).powi(2) / expected;
            }
        }
    }
    let df = (r - 1) * (c - 1);
    Ok((stat, df, chi_square_sf(stat, df as f64)))
}

/// Chi-square test that two samples share a distribution, on a 2 × K
/// table of sample × quantile bin of the pooled values. Adjacent bins are
/// merged until every expected count is at least 5.
pub fn chi_square_homogeneity(a: &[f64], b: &[f64], n_bins: usize) -> Result<ChiSquareResult, PoolingError> {
    check_finite(a)?;
    check_finite(b)?;
    if n_bins < 2 {
        return Err(PoolingError::InvalidBins(n_bins));
    }
    if a.is_empty() || b.is_empty() {
        return Err(PoolingError::TooFewObservations { needed: 1, got: 0 });
    }
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let n = pooled.len();
    if pooled[0] == pooled[n - 1] {
        return Err(PoolingError::DegenerateBins);
    }

    // cut k is the pooled order statistic at rank ceil(k·n/n_bins)
    let cuts: Vec<f64> = (1..n_bins).map(|k| pooled[(k * n).div_ceil(n_bins) - 1]).collect();
    let bin_of = |x: f64| cuts.partition_point(|&c| c < x);
    let mut counts = vec![[0.0f64; 2]; n_bins];
    for &x in a {
        counts[bin_of(x)][0] += 1.0;
    }
    for &x in b {
        counts[bin_of(x)][1] += 1.0;
    }
    counts.retain(|c| c[0] + c[1] > 0.0);

    let min_row = a.len().min(b.len()) as f64;
    let total = n as f64;
    let col = |c: &[f64; 2]| c[0] + c[1];
    while counts.len() > 1 && counts.iter().any(|c| min_row * col(c) / total < MIN_EXPECTED_COUNT) {
        let (j, _) = counts
            .iter()
            .enumerate()
            .min_by(|x, y| col(x.1).total_cmp(&col(y.1)))
            .expect("non-empty");
        let neighbour = if j == 0 {
            1
        } else if j == counts.len() - 1 || col(&counts[j - 1]) <= col(&counts[j + 1]) {
            j - 1
        } else {
            j + 1
        };
        let (lo, hi) = (j.min(neighbour), j.max(neighbour));
        let merged = counts.remove(hi);
        counts[lo][0] += merged[0];
        counts[lo][1] += merged[1];
    }
    if counts.len() < 2 {
        return Err(PoolingError::InsufficientData { observations: n });
    }

    let table = vec![counts.iter().map(|c| c[0]).collect(), counts.iter().map(|c| c[1]).collect()];
    let (stat, df, p) = pearson_chi_square(&table)?;
    Ok(ChiSquareResult { stat, df, p, bin_counts: counts.iter().map(|c| col(c) as usize).collect() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTest {
    pub z: f64,
    pub p: f64,
}

fn weighted_moments(values: &[f64], weights: &[f64]) -> Result<(f64, f64, usize), PoolingError> {
    if values.len() != weights.len() {
        return Err(PoolingError::LengthMismatch(values.len(), weights.len()));
    }
    if values.len() < 2 {
        return Err(PoolingError::TooFewObservations { needed: 2, got: values.len() });
    }
    check_finite(values)?;
    check_finite(weights)?;
    if weights.iter().any(|&w| w <= 0.0) {
        return Err(PoolingError::NonPositiveWeight);
    }
    let w: f64 = weights.iter().sum();
    let mean = values.iter().zip(weights).map(|(y, w)| y * w).sum::<f64>() / w;
    let n = values.len() as f64;
    let var = values.iter().zip(weights).map(|(y, w)| w * (y - mean).powi(2)).sum::<f64>() / w * n / (n - 1.0);
    Ok((mean, var, values.len()))
}

/// Two-sample z-test of equal means with weighted means and weighted
/// (n/(n−1)-corrected) variances; equal weights give the ordinary test.
pub fn z_test_means(
    values_a: &[f64],
    weights_a: &[f64],
    values_b: &[f64],
    weights_b: &[f64],
) -> Result<ZTest, PoolingError> {
    let (ma, va, na) = weighted_moments(values_a, weights_a)?;
    let (mb, vb, nb) = weighted_moments(values_b, weights_b)?;
    let se2 = va / na as f64 + vb / nb as f64;
    if se2 == 0.0 {
        return Err(PoolingError::ZeroVariance);
    }
    let z = (ma - mb) / se2.sqrt();
    Ok(ZTest { z, p: normal_two_sided_p(z) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interleaved_runs() {
        let a = [1.0, 3.0, 5.0, 7.0, 9.0];
        let b = [2.0, 4.0, 6.0, 8.0, 10.0];
        let r = runs_test(&a, &b).unwrap();
        assert_eq!(r.runs, 10);
        // mean 6, variance 2·25·40/(100·9) = 2.2222
        assert!((r.z - 4.0 / (200.0f64 / 90.0).sqrt()).abs() < 1e-12);
        assert!((r.z - 2.683).abs() < 1e-3);
        assert!((r.p - 0.0073).abs() < 1e-4);
    }

    #[test]
    fn separated_runs() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [6.0, 7.0, 8.0, 9.0, 10.0];
        let r = runs_test(&a, &b).unwrap();
        assert_eq!(r.runs, 2);
        assert!((r.z + 2.683).abs() < 1e-3);
        assert!((r.p - 0.0073).abs() < 1e-4);
    }

    #[test]
    fn runs_errors_and_ties() {
        assert!(matches!(runs_test(&[1.0; 4], &[2.0; 4]), Err(PoolingError::TooFewObservations { needed: 10, got: 8 })));
        assert!(runs_test(&[], &[1.0; 12]).is_err());
        let r = runs_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[5.0, 6.0, 7.0, 8.0, 9.0]).unwrap();
        assert_eq!(r.ties_across, 2);
        assert_eq!(r.runs, 2);
    }

    #[test]
    fn chi_square_identical_table() {
        let (stat, df, p) = pearson_chi_square(&[vec![10.0, 10.0], vec![10.0, 10.0]]).unwrap();
        assert_eq!((stat, df), (0.0, 1));
        assert!((p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chi_square_separated_samples() {
        let a: Vec<f64> = (0..100).map(|i| i as f64 * 1e-3).collect();
        let b: Vec<f64> = (0..100).map(|i| 1000.0 + i as f64 * 1e-3).collect();
        let r = chi_square_homogeneity(&a, &b, 2).unwrap();
        assert!((r.stat - 200.0).abs() < 1e-9);
        assert_eq!(r.df, 1);
        assert!(r.p < 1e-10);
    }

    #[test]
    fn chi_square_merges_bins() {
        let a: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..12).map(|i| i as f64 + 0.5).collect();
        let r = chi_square_homogeneity(&a, &b, 10).unwrap();
        // 12 per sample: each bin needs ≥ 10 pooled observations
        assert_eq!(r.df, r.bin_counts.len() - 1);
        assert!(r.bin_counts.iter().all(|&c| c as f64 * 12.0 / 24.0 >= 5.0));
        assert_eq!(r.bin_counts.iter().sum::<usize>(), 24);

        // 12 observations in total cannot support two bins
        let small = chi_square_homogeneity(&a[..6], &b[..6], 10);
        assert_eq!(small, Err(PoolingError::InsufficientData { observations: 12 }));
    }

    #[test]
    fn chi_square_errors() {
        assert_eq!(chi_square_homogeneity(&[3.0; 20], &[3.0; 20], 10), Err(PoolingError::DegenerateBins));
        assert_eq!(chi_square_homogeneity(&[1.0, 2.0], &[3.0], 1), Err(PoolingError::InvalidBins(1)));
    }

    #[test]
    fn z_test_values() {
        let a = [1.0, 4.0, 2.0, 8.0];
        let r = z_test_means(&a, &[1.0; 4], &a, &[1.0; 4]).unwrap();
        assert_eq!(r.z, 0.0);
        assert!((r.p - 1.0).abs() < 1e-15);

        // sample variance exactly 1 around 10 and 20, n = 50 each
        let d = (49.0f64 / 50.0).sqrt();
        let a: Vec<f64> = (0..50).map(|i| if i % 2 == 0 { 10.0 + d } else { 10.0 - d }).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
        let r = z_test_means(&a, &[1.0; 50], &b, &[1.0; 50]).unwrap();
        assert!((r.z + 50.0).abs() < 1e-9);
        assert!(r.p < 1e-300);
    }

    #[test]
    fn z_test_equal_weights_match_unweighted() {
        let a = [3.0, 7.0, 1.0, 9.0, 4.0];
        let b = [2.0, 2.5, 6.0, 1.0];
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        let var = |x: &[f64]| {
            let m = mean(x);
            x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
        };
        let expected = (mean(&a) - mean(&b)) / (var(&a) / 5.0 + var(&b) / 4.0).sqrt();
        let r = z_test_means(&a, &[2.5; 5], &b, &[2.5; 4]).unwrap();
        assert!((r.z - expected).abs() < 1e-12);
    }

    #[test]
    fn z_test_zero_variance() {
        assert_eq!(z_test_means(&[1.0, 1.0], &[1.0, 1.0], &[2.0, 2.0], &[1.0, 1.0]), Err(PoolingError::ZeroVariance));
    }
}
