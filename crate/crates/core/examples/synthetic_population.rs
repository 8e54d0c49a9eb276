//! Generate a seeded population with two agency samples and compare the
//! pooled estimates with the population truth.

use cheq::estimation::estimate_che;
use cheq::estimation::Domain;
use cheq::pooling::{pool_datasets, poolability, PoolabilityOptions};
use cheq::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SynthConfig { districts: vec![1, 8, 16], population_per_district: 20_000, households_per_agency: 2_000, ..Default::default() };
    let out = generate(&config)?;
    let report = poolability(&out.central, &out.state, &PoolabilityOptions::default())?;
    let pooled = pool_datasets(&out.central, &out.state, &report, true)?.dataset;

    println!("population {} households, pooled sample {}", out.truth.households, pooled.households.len());
    for (k, &t) in out.truth.thresholds.iter().enumerate() {
        let e = estimate_che(&pooled.households, t, &Domain::ALL)?;
        println!(
            "CHE at {:>2.0}%: truth {:.2}%  estimate {:.2}%  (se {:.2})",
            100.0 * t,
            100.0 * out.truth.che_incidence[k],
            100.0 * e.incidence,
            100.0 * e.se.unwrap_or(f64::NAN)
        );
    }
    println!("coverage truth {:.1}%", 100.0 * out.truth.coverage_rate);
    if let Some(g) = out.truth.gini_private_inpatient {
        println!("private inpatient Gini truth {g:.4}");
    }
    Ok(())
}
