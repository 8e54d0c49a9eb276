//! Weighted Gini and its between/within/overlap split, on a hand example
//! and on the fixture's private inpatient spending by district.

use std::path::Path;

use cheq::data_model::{load_dataset, GroupingSpec};
use cheq::inequality::{decompose, district_decomposition_table, weighted_gini, DecompositionMode, GiniTableOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("Gini of 1,2,3 = {:.4}", weighted_gini(&[1.0, 2.0, 3.0], &[1.0; 3])?);

    let values = [1.0, 3.0, 2.0, 4.0];
    let labels = ["Male", "Male", "Female", "Female"];
    for mode in [DecompositionMode::StrictPyatt, DecompositionMode::SignedTwoGroup] {
        let d = decompose(&values, &[1.0; 4], &labels, &GroupingSpec::sex(), mode)?;
        println!(
            "{mode:?}: total {:.3} = between {:.3} ({:.1}) + within {:.3} ({:.1}) + overlap {:.3} ({:.1})",
            d.total, d.between, d.between_share, d.within, d.within_share, d.overlap, d.overlap_share
        );
    }

    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let data = load_dataset(&dir.join("central_households.csv"), Some(&dir.join("central_episodes.csv")), None)?;
    let groupings = [GroupingSpec::sex(), GroupingSpec::sector(), GroupingSpec::social(), GroupingSpec::religion()];
    let table = district_decomposition_table(&data, &groupings, &GiniTableOptions::default())?;
    print!("\n{}", table.render_text());
    Ok(())
}
