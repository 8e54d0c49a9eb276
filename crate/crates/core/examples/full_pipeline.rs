//! Run the whole analysis on the fixture and list the report files.

use std::path::Path;

use cheq::pipeline::{run_pipeline, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let mut config = RunConfig::from_json_file(&fixtures.join("run.json"))?;
    let out = tempfile::tempdir()?;
    config.out_dir = out.path().join("report");

    let bundle = run_pipeline(&config)?;
    for artifact in &bundle.manifest.artifacts {
        for f in &artifact.files {
            println!("{:<12} {:<34} {}", artifact.name, f.file, &f.sha256[..12]);
        }
    }
    println!();
    print!("{}", std::fs::read_to_string(config.out_dir.join("gini_decomposition.txt"))?);
    Ok(())
}
