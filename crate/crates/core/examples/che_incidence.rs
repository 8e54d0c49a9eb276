//! CHE incidence at 10/20/40% by district and expenditure quintile, plus
//! person-weighted coverage.

use std::path::Path;

use cheq::data_model::{load_dataset, Agency, District};
use cheq::estimation::{che_by_quintile, coverage_rate, estimate_che, Domain, DEFAULT_THRESHOLDS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let data = load_dataset(&dir.join("state_households.csv"), None, Some(Agency::State))?;
    let hs = &data.households;

    for domain in [Domain::ALL, Domain::district(District::new(1).unwrap()), Domain::district(District::new(2).unwrap())] {
        let cells: Vec<String> = DEFAULT_THRESHOLDS
            .iter()
            .map(|&t| {
                let e = estimate_che(hs, t, &domain).expect("non-empty domain");
                format!("{:.1}% (se {:.1})", 100.0 * e.incidence, 100.0 * e.se.unwrap_or(f64::NAN))
            })
            .collect();
        let cov = coverage_rate(hs, &domain)?;
        println!("{:<12} CHE {}  coverage {:.1}%", domain.to_string(), cells.join("  "), 100.0 * cov.estimate);
    }

    let table = che_by_quintile(hs, &DEFAULT_THRESHOLDS)?;
    println!("\nMPCE class    10%    20%    40%");
    for (i, row) in table.rows.iter().enumerate() {
        let cells: Vec<String> =
            row.iter().map(|e| e.as_ref().map_or("  -  ".into(), |e| format!("{:5.1}", 100.0 * e.incidence))).collect();
        println!("{:<10} {}", i + 1, cells.join("  "));
    }
    Ok(())
}
