//! Test whether the central and state samples share a distribution, then
//! pool them with stratum-proportional multipliers.

use std::path::Path;

use cheq::data_model::{load_dataset, Agency};
use cheq::pooling::{pool_datasets, poolability, runs_test, PoolVariable, PoolabilityOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let central = load_dataset(&dir.join("central_households.csv"), None, Some(Agency::Central))?;
    let state = load_dataset(&dir.join("state_households.csv"), None, Some(Agency::State))?;

    // interleaved 5 + 5 gives the maximum 10 runs
    let a = [1.0, 3.0, 5.0, 7.0, 9.0];
    let b = [2.0, 4.0, 6.0, 8.0, 10.0];
    let r = runs_test(&a, &b)?;
    println!("interleaved: runs = {}, z = {:.3}, p = {:.4}", r.runs, r.z, r.p);

    for variable in [PoolVariable::Aexp, PoolVariable::PerCapitaExpenditure] {
        let options = PoolabilityOptions { variable, ..Default::default() };
        let report = poolability(&central, &state, &options)?;
        println!(
            "{:>24}: runs p {:.3}  chi2({}) p {:.3}  z p {:.3}  poolable {}",
            variable.label(),
            report.runs_p,
            report.chi2_df,
            report.chi2_p,
            report.z_means_p,
            report.poolable
        );
    }

    let report = poolability(&central, &state, &PoolabilityOptions::default())?;
    let pooled = pool_datasets(&central, &state, &report, false)?;
    let total = |hs: &[cheq::data_model::HouseholdRecord]| hs.iter().map(|h| h.multiplier).sum::<f64>();
    println!(
        "pooled {} households; weight totals central {:.0}, state {:.0}, pooled {:.0}",
        pooled.dataset.households.len(),
        total(&central.households),
        total(&state.households),
        total(&pooled.dataset.households)
    );
    Ok(())
}
