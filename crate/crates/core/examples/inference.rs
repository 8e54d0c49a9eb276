//! Spearman correlation with its t-approximation p-value, Welch's t-test
//! and a normal interval for a mean across districts.

use cheq::stats::{across_district_ci, correlation_significance, spearman, welch_t, ConfidenceLevel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (t, p) = correlation_significance(0.413, 19);
    println!("rho 0.413 over 19 districts: t = {t:.3}, p = {p:.3}");

    let coverage = [15.5, 12.9, 0.7, 12.9, 14.0, 11.2, 9.8, 36.5, 18.1, 13.3, 16.0, 14.4, 10.1, 8.7, 17.2, 19.9, 12.0, 13.8, 15.1];
    let che10 = [31.0, 29.4, 33.8, 30.2, 28.8, 32.5, 34.1, 25.3, 27.7, 30.9, 26.4, 29.0, 31.8, 35.2, 28.1, 24.9, 30.5, 29.9, 27.3];
    let r = spearman(&coverage, &che10)?;
    println!("coverage vs CHE10: rho = {:.3}, p = {:.4}", r.rho, r.p_two_sided);

    let all = [0.726, 0.64, 0.70, 0.66, 0.69, 0.71, 0.65];
    let chronic = [0.70, 0.68, 0.66, 0.72, 0.64, 0.69, 0.67];
    let w = welch_t(&all, &chronic)?;
    println!("all vs chronic Gini: t = {:.3}, df = {:.1}, p = {:.3}", w.t, w.df, w.p_two_sided);

    let shares = [42.6, 10.3, 15.0, 8.1, 22.4, 19.9, 12.7, 30.5, 5.2, 17.8, 21.3, 9.6, 14.4, 25.0, 11.1, 18.2, 16.6, 20.7, 5.5];
    for level in [ConfidenceLevel::Ninety, ConfidenceLevel::NinetyFive, ConfidenceLevel::NinetyNine] {
        let ci = across_district_ci(&shares, level)?;
        println!("{}%: mean {:.1} (CI {:.1}-{:.1})", level.percent(), ci.mean, ci.lo, ci.hi);
    }
    Ok(())
}
