//! Load the committed fixture, validate it, then show what a broken
//! record looks like to the validator.

use std::path::Path;

use cheq::data_model::{load_dataset, validate_dataset, Agency};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let mut central = load_dataset(
        &dir.join("central_households.csv"),
        Some(&dir.join("central_episodes.csv")),
        Some(Agency::Central),
    )?;
    println!(
        "{}: {} households, {} episodes, valid = {}",
        central.label,
        central.households.len(),
        central.episodes.len(),
        validate_dataset(&central).is_valid()
    );

    let h = &mut central.households[0];
    h.oop_inpatient = h.oop_total + 5.0;
    central.episodes[0].hh_id = "missing".into();
    for v in validate_dataset(&central).violations {
        println!("  {v:?}");
    }
    Ok(())
}
