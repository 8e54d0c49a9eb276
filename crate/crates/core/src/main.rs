use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cheq::data_model::{load_dataset, validate_dataset, write_episodes, write_households, Agency, CareType, SurveyDataset};
use cheq::estimation::DEFAULT_THRESHOLDS;
use cheq::inequality::{ChronicFilter, DecompositionMode, GiniTableOptions, ValueSelector};
use cheq::pipeline::{
    build_che_tables, build_component_table, build_coverage_table, gini_table, pct, run_pipeline, threshold_label,
    write_choropleth, DistrictNames, GroupingChoice, PipelineError, RunConfig, EXIT_INTERNAL, EXIT_NOT_POOLABLE,
    EXIT_VALIDATION,
};
use cheq::pooling::{pool_datasets, poolability, PoolVariable, PoolabilityOptions, PoolingError};
use cheq::stats::{spearman, welch_t, ConfidenceLevel};
use cheq::synth::{generate, write_output, SynthConfig};

#[derive(Parser)]
#[command(name = "cheq", version, about = "Catastrophic health expenditure and OOP inequality from survey microdata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic population and two agency samples
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Test whether the central and state samples can be pooled
    Poolability {
        #[command(flatten)]
        samples: Samples,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value = "aexp", value_parser = parse_from_str::<PoolVariable>)]
        variable: PoolVariable,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        /// JSON report path; stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pool the two samples with rescaled multipliers
    Pool {
        #[command(flatten)]
        samples: Samples,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value = "aexp", value_parser = parse_from_str::<PoolVariable>)]
        variable: PoolVariable,
        #[arg(long)]
        force: bool,
        /// Pooled households CSV
        #[arg(long)]
        out: PathBuf,
        /// Pooled episodes CSV
        #[arg(long)]
        episodes_out: Option<PathBuf>,
    },
    /// CHE incidence, coverage and component-share tables
    Estimate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        episodes: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_THRESHOLDS)]
        thresholds: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "district,quintile")]
        by: Vec<Breakdown>,
        #[arg(long, default_value = "99", value_parser = parse_level)]
        level: ConfidenceLevel,
        #[arg(long)]
        out: PathBuf,
        /// Also write district_code,value CSVs for mapping
        #[arg(long)]
        choropleth: bool,
    },
    /// Gini decomposition by subgroup
    Gini {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        episodes: PathBuf,
        #[arg(long, default_value = "oop_private_inpatient", value_parser = parse_from_str::<ValueSelector>)]
        value: ValueSelector,
        #[arg(long, value_delimiter = ',', default_value = "sex,sector,social,religion")]
        group: Vec<String>,
        /// Reference category overrides, e.g. sex=Female
        #[arg(long, value_delimiter = ',')]
        reference: Vec<String>,
        #[arg(long, default_value = "signed", value_parser = parse_from_str::<DecompositionMode>)]
        mode: DecompositionMode,
        #[arg(long, default_value = "district")]
        by: GiniBy,
        #[arg(long)]
        chronic_only: bool,
        #[arg(long, default_value = "99", value_parser = parse_level)]
        level: ConfidenceLevel,
        /// CSV path; a text table goes to stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spearman correlation or Welch t-test of two numeric columns
    Stats {
        test: StatsTest,
        /// Two single-column CSV files, comma separated
        #[arg(long = "in", value_delimiter = ',', num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Full pipeline from a JSON run config
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        #[arg(long, value_parser = parse_from_str::<DecompositionMode>)]
        mode: Option<DecompositionMode>,
        #[arg(long, value_parser = parse_from_str::<ValueSelector>)]
        value: Option<ValueSelector>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        force: bool,
    },
}

#[derive(Args)]
struct Samples {
    #[arg(long)]
    central: PathBuf,
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    central_episodes: Option<PathBuf>,
    #[arg(long)]
    state_episodes: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Breakdown {
    District,
    Quintile,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum GiniBy {
    District,
    State,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatsTest {
    Spearman,
    Ttest,
}

fn parse_from_str<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T, String> {
    s.parse()
}

fn parse_level(s: &str) -> Result<ConfidenceLevel, String> {
    s.trim_end_matches('%')
        .parse::<u32>()
        .ok()
        .and_then(ConfidenceLevel::from_percent)
        .ok_or_else(|| format!("confidence level must be 90, 95 or 99, got '{s}'"))
}

/// Error carrying the process exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn validation(e: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_VALIDATION, message: e.to_string() }
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_INTERNAL, message: e.to_string() }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure { code: e.exit_code(), message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::internal(e)
    }
}

type CliResult = Result<(), Failure>;

fn load(hh: &Path, eps: Option<&Path>, agency: Option<Agency>) -> Result<SurveyDataset, Failure> {
    let dataset = load_dataset(hh, eps, agency).map_err(|e| Failure::validation(format!("{}: {e}", hh.display())))?;
    let report = validate_dataset(&dataset);
    if let Some(first) = report.violations.first() {
        return Err(Failure::validation(format!(
            "{}: {} validation violations, first: {first:?}",
            hh.display(),
            report.violations.len()
        )));
    }
    Ok(dataset)
}

fn load_samples(s: &Samples) -> Result<(SurveyDataset, SurveyDataset), Failure> {
    Ok((
        load(&s.central, s.central_episodes.as_deref(), Some(Agency::Central))?,
        load(&s.state, s.state_episodes.as_deref(), Some(Agency::State))?,
    ))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Failure::internal(format!("{}: {e}", path.display())))?))
}

fn write_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(Failure::internal)?;
    match out {
        Some(path) => writeln!(create(path)?, "{text}")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn write_csv_file(path: &Path, render: impl FnOnce(&mut BufWriter<File>) -> Result<(), csv::Error>) -> CliResult {
    let mut w = create(path)?;
    render(&mut w).map_err(Failure::internal)?;
    w.flush()?;
    Ok(())
}

fn read_column(path: &Path) -> Result<Vec<f64>, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
        let cell = record.get(0).unwrap_or("").trim();
        match cell.parse::<f64>() {
            Ok(v) => values.push(v),
            // a header line
            Err(_) if i == 0 => {}
            Err(_) => return Err(Failure::validation(format!("{}: row {}: '{cell}' is not a number", path.display(), i + 1))),
        }
    }
    Ok(values)
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Synth { config, seed, out } => {
            let mut config = match config {
                Some(path) => SynthConfig::from_json_file(&path).map_err(Failure::validation)?,
                None => SynthConfig::default(),
            };
            if let Some(seed) = seed {
                config.seed = seed;
            }
            config.validate().map_err(Failure::validation)?;
            let output = generate(&config).map_err(Failure::internal)?;
            write_output(&output, &out).map_err(Failure::internal)?;
            log::info!(
                "wrote {} central and {} state households to {}",
                output.central.households.len(),
                output.state.households.len(),
                out.display()
            );
        }
        Command::Poolability { samples, alpha, variable, bins, out } => {
            let (central, state) = load_samples(&samples)?;
            let options = PoolabilityOptions { alpha, variable, n_bins: bins };
            let report = poolability(&central, &state, &options).map_err(Failure::validation)?;
            write_json(out.as_deref(), &report)?;
        }
        Command::Pool { samples, alpha, variable, force, out, episodes_out } => {
            let (central, state) = load_samples(&samples)?;
            let options = PoolabilityOptions { alpha, variable, ..Default::default() };
            let report = poolability(&central, &state, &options).map_err(Failure::validation)?;
            let pooled = pool_datasets(&central, &state, &report, force).map_err(|e| match e {
                PoolingError::NotPoolable { .. } => {
                    Failure { code: EXIT_NOT_POOLABLE, message: format!("{e}; pass --force to pool anyway") }
                }
                other => Failure::internal(other),
            })?;
            write_households(create(&out)?, &pooled.dataset.households).map_err(Failure::internal)?;
            if let Some(path) = episodes_out {
                write_episodes(create(&path)?, &pooled.dataset.episodes).map_err(Failure::internal)?;
            }
        }
        Command::Estimate { data, episodes, thresholds, by, level, out, choropleth } => {
            let dataset = load(&data, episodes.as_deref(), None)?;
            if thresholds.is_empty()
                || thresholds.iter().any(|&t| !(t > 0.0 && t < 1.0))
                || thresholds.windows(2).any(|w| w[0] >= w[1])
            {
                return Err(Failure::validation("thresholds must be strictly ascending values in (0, 1)"));
            }
            let names = DistrictNames::default();
            let che = build_che_tables(&dataset, &thresholds).map_err(Failure::validation)?;
            let coverage = build_coverage_table(&dataset, level).map_err(Failure::validation)?;
            fs::create_dir_all(&out)?;
            write_csv_file(&out.join("che_overall.csv"), |w| che.write_overall(w))?;
            if by.contains(&Breakdown::District) {
                write_csv_file(&out.join("che_by_district.csv"), |w| che.write_by_district(w, &names))?;
                write_csv_file(&out.join("coverage_by_district.csv"), |w| coverage.write_csv(w, &names))?;
            }
            if by.contains(&Breakdown::Quintile) {
                write_csv_file(&out.join("che_by_quintile.csv"), |w| che.write_by_quintile(w))?;
            }
            let mut components = Vec::new();
            if !dataset.episodes.is_empty() {
                for (care, file) in [(CareType::Inpatient, "components_inpatient.csv"), (CareType::Outpatient, "components_outpatient.csv")] {
                    let table = build_component_table(&dataset, care);
                    write_csv_file(&out.join(file), |w| table.write_csv(w, &names))?;
                    components.push(table);
                }
            }
            if choropleth {
                for (k, &t) in thresholds.iter().enumerate() {
                    let values: Vec<_> =
                        che.by_district.iter().map(|r| (r.district, r.estimates[k].as_ref().map(|e| pct(e.incidence)))).collect();
                    write_csv_file(&out.join(format!("choropleth_{}.csv", threshold_label(t))), |w| write_choropleth(w, &values))?;
                }
                let values: Vec<_> = coverage
                    .rows
                    .iter()
                    .filter_map(|r| Some((r.district?, r.estimate.map(|e| pct(e.estimate)))))
                    .collect();
                write_csv_file(&out.join("choropleth_coverage.csv"), |w| write_choropleth(w, &values))?;
            }
            let combined = serde_json::json!({ "che": che, "coverage": coverage, "components": components });
            write_json(Some(&out.join("estimates.json")), &combined)?;
        }
        Command::Gini { data, episodes, value, group, reference, mode, by, chronic_only, level, out } => {
            let mut choices: Vec<GroupingChoice> = group.iter().map(|g| GroupingChoice::new(g)).collect();
            for r in &reference {
                let (name, category) =
                    r.split_once('=').ok_or_else(|| Failure::validation(format!("reference '{r}' must look like group=Category")))?;
                let choice = choices
                    .iter_mut()
                    .find(|c| c.name == name)
                    .ok_or_else(|| Failure::validation(format!("reference for unselected grouping '{name}'")))?;
                choice.reference = Some(category.to_string());
            }
            let groupings = choices.iter().map(GroupingChoice::resolve).collect::<Result<Vec<_>, _>>()?;
            let dataset = load(&data, Some(&episodes), None)?;
            let options = GiniTableOptions {
                selector: value,
                chronic: if chronic_only { ChronicFilter::ChronicOnly } else { ChronicFilter::All },
                mode,
                significance: level,
                ..Default::default()
            };
            let mut table = gini_table(&dataset, &groupings, &options, &DistrictNames::default())?;
            if by == GiniBy::State {
                table.rows.retain(|r| r.district.is_none());
            }
            match out {
                Some(path) => write_csv_file(&path, |w| table.write_csv(w))?,
                None => print!("{}", table.render_text()),
            }
        }
        Command::Stats { test, inputs } => {
            let [a, b] = inputs.as_slice() else {
                return Err(Failure::validation("--in takes exactly two files"));
            };
            let (x, y) = (read_column(a)?, read_column(b)?);
            match test {
                StatsTest::Spearman => write_json(None, &spearman(&x, &y).map_err(Failure::validation)?)?,
                StatsTest::Ttest => write_json(None, &welch_t(&x, &y).map_err(Failure::validation)?)?,
            }
        }
        Command::Run { config, out, thresholds, mode, value, alpha, force } => {
            let mut config = RunConfig::from_json_file(&config)?;
            if let Some(out) = out {
                config.out_dir = out;
            }
            if let Some(t) = thresholds {
                config.thresholds = t;
            }
            if let Some(m) = mode {
                config.mode = m;
            }
            if let Some(v) = value {
                config.value = v;
            }
            if let Some(a) = alpha {
                config.alpha = a;
            }
            config.force |= force;
            let bundle = run_pipeline(&config)?;
            let p = &bundle.report.poolability;
            eprintln!(
                "poolability: runs p = {:.4}, chi-square p = {:.4}, z p = {:.4} ({})",
                p.runs_p,
                p.chi2_p,
                p.z_means_p,
                if p.poolable { "poolable" } else { "not poolable, forced" }
            );
            eprintln!("wrote {} artifacts to {}", bundle.manifest.artifacts.len(), bundle.out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
