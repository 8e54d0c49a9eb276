//! End-to-end run: load → poolability → pool → CHE, coverage, Gini and
//! component tables → district statistics → report files and manifest.
//!
//! Output is a pure function of the input files and the config. Files are
//! rendered in memory, staged in a temporary directory inside the output
//! directory and moved into place only when every stage succeeded.

mod tables;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::data_model::{load_dataset, validate_dataset, Agency, CareType, DataError, GroupingSpec, SurveyDataset};
use crate::estimation::DEFAULT_THRESHOLDS;
use crate::inequality::{
    district_decomposition_table, ChronicFilter, DecompositionMode, GiniTable, GiniTableOptions, ValueSelector,
};
use crate::pooling::{pool_datasets, poolability, PoolVariable, PoolabilityOptions, PoolabilityReport, PoolingError};
use crate::stats::ConfidenceLevel;

pub use tables::{
    build_che_tables, build_component_table, build_coverage_table, build_stats_summary, districts_of, gini4, pct,
    threshold_label, threshold_pct, write_choropleth, BetweenShareInterval, CheTables, ComponentRow, ComponentTable,
    CoverageCheCorrelation, CoverageRow, CoverageTable, DistrictChe, DistrictNames, RankCorrelation, StatsSummary,
    VersusState,
};

/// Exit status of the command-line front end.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NOT_POOLABLE: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Data {
        stage: &'static str,
        #[source]
        source: DataError,
    },
    #[error("{stage}: dataset failed validation ({count} violations, first: {first})")]
    Invalid { stage: &'static str, count: usize, first: String },
    #[error("pooling: {0}")]
    NotPoolable(PoolingError),
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Data { .. } | PipelineError::Invalid { .. } => EXIT_VALIDATION,
            PipelineError::NotPoolable(_) => EXIT_NOT_POOLABLE,
            PipelineError::Stage { .. } | PipelineError::Io(_) => EXIT_INTERNAL,
        }
    }

    fn stage(stage: &'static str, e: impl std::fmt::Display) -> Self {
        PipelineError::Stage { stage, message: e.to_string() }
    }
}

/// A grouping preset by name with an optional reference category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingChoice {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

impl GroupingChoice {
    pub fn new(name: &str) -> Self {
        GroupingChoice { name: name.to_string(), reference: None }
    }

    pub fn resolve(&self) -> Result<GroupingSpec, PipelineError> {
        let spec = GroupingSpec::by_name(&self.name).map_err(|e| PipelineError::Config(e.to_string()))?;
        match &self.reference {
            Some(r) => spec.with_reference(r).map_err(|e| PipelineError::Config(e.to_string())),
            None => Ok(spec),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub central_households: PathBuf,
    pub central_episodes: Option<PathBuf>,
    pub state_households: PathBuf,
    pub state_episodes: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub thresholds: Vec<f64>,
    pub groupings: Vec<GroupingChoice>,
    pub mode: DecompositionMode,
    pub value: ValueSelector,
    /// Level of the coverage intervals, the Gini significance flags and
    /// the across-district interval of between shares.
    pub ci_level: ConfidenceLevel,
    pub alpha: f64,
    pub pool_variable: PoolVariable,
    pub n_bins: usize,
    /// Pool even when the poolability tests reject.
    pub force: bool,
    pub low_n_threshold: usize,
    pub district_names: DistrictNames,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            central_households: PathBuf::new(),
            central_episodes: None,
            state_households: PathBuf::new(),
            state_episodes: None,
            out_dir: PathBuf::from("report"),
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            groupings: ["sex", "sector", "social", "religion"].map(GroupingChoice::new).to_vec(),
            mode: DecompositionMode::SignedTwoGroup,
            value: ValueSelector::OopPrivateInpatient,
            ci_level: ConfidenceLevel::NinetyNine,
            alpha: 0.05,
            pool_variable: PoolVariable::Aexp,
            n_bins: 10,
            force: false,
            low_n_threshold: 10,
            district_names: DistrictNames::default(),
        }
    }
}

impl RunConfig {
    /// Reads a JSON config; relative paths are taken relative to the
    /// config file's directory.
    pub fn from_json_file(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut config: RunConfig =
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut config.central_households);
        fix(&mut config.state_households);
        fix(&mut config.out_dir);
        config.central_episodes.as_mut().map(fix);
        config.state_episodes.as_mut().map(fix);
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.central_households.as_os_str().is_empty() || self.state_households.as_os_str().is_empty() {
            return Err(PipelineError::Config("both household files are required".into()));
        }
        if self.thresholds.is_empty() {
            return Err(PipelineError::Config("at least one threshold is required".into()));
        }
        if self.thresholds.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(PipelineError::Config("thresholds must lie in (0, 1)".into()));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PipelineError::Config("thresholds must be strictly ascending".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(PipelineError::Config(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        for g in &self.groupings {
            g.resolve()?;
        }
        Ok(())
    }

    /// Copy with input paths reduced to file names and no output
    /// directory, so the echo does not depend on where files live.
    fn portable(&self) -> RunConfig {
        let base = |p: &Path| PathBuf::from(p.file_name().unwrap_or_default());
        RunConfig {
            central_households: base(&self.central_households),
            central_episodes: self.central_episodes.as_deref().map(base),
            state_households: base(&self.state_households),
            state_episodes: self.state_episodes.as_deref().map(base),
            out_dir: PathBuf::new(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    pub files: Vec<FileHash>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub inputs: Vec<FileHash>,
    pub artifacts: Vec<Artifact>,
    pub combined: FileHash,
}

/// Every table of a run, as written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub poolability: PoolabilityReport,
    pub pooled_households: usize,
    pub pooled_episodes: usize,
    pub che: CheTables,
    pub coverage: CoverageTable,
    pub gini: GiniTable,
    pub gini_chronic: GiniTable,
    pub components_inpatient: ComponentTable,
    pub components_outpatient: ComponentTable,
    pub stats: StatsSummary,
}

#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub report: Report,
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Rendered output files grouped into named artifacts.
#[derive(Default)]
struct Outputs {
    files: BTreeMap<String, Vec<u8>>,
    artifacts: Vec<Artifact>,
}

impl Outputs {
    fn add(&mut self, artifact: &str, file: &str, bytes: Vec<u8>) {
        let hash = FileHash { file: file.to_string(), sha256: sha256_hex(&bytes) };
        match self.artifacts.iter_mut().find(|a| a.name == artifact) {
            Some(a) => a.files.push(hash),
            None => self.artifacts.push(Artifact { name: artifact.to_string(), files: vec![hash] }),
        }
        self.files.insert(file.to_string(), bytes);
    }

    fn add_csv(
        &mut self,
        artifact: &str,
        file: &str,
        render: impl FnOnce(&mut Vec<u8>) -> Result<(), csv::Error>,
    ) -> Result<(), PipelineError> {
        let mut buf = Vec::new();
        render(&mut buf).map_err(|e| PipelineError::stage("report", e))?;
        self.add(artifact, file, buf);
        Ok(())
    }

    fn add_json<T: Serialize>(&mut self, artifact: &str, file: &str, value: &T) -> Result<(), PipelineError> {
        let mut buf = serde_json::to_vec_pretty(value).map_err(|e| PipelineError::stage("report", e))?;
        buf.push(b'\n');
        self.add(artifact, file, buf);
        Ok(())
    }

    /// Writes through a staging directory so a failure leaves no partial
    /// files behind.
    fn commit(self, out_dir: &Path) -> Result<(), PipelineError> {
        let created = !out_dir.exists();
        fs::create_dir_all(out_dir)?;
        let result = (|| -> Result<(), PipelineError> {
            let staging = tempfile::Builder::new().prefix(".cheq-staging-").tempdir_in(out_dir)?;
            for (name, bytes) in &self.files {
                fs::write(staging.path().join(name), bytes)?;
            }
            for name in self.files.keys() {
                fs::rename(staging.path().join(name), out_dir.join(name))?;
            }
            Ok(())
        })();
        if result.is_err() && created {
            let _ = fs::remove_dir_all(out_dir);
        }
        result
    }
}

fn load(stage: &'static str, hh: &Path, eps: Option<&Path>, agency: Agency) -> Result<SurveyDataset, PipelineError> {
    let dataset = load_dataset(hh, eps, Some(agency)).map_err(|source| PipelineError::Data { stage, source })?;
    let report = validate_dataset(&dataset);
    if let Some(first) = report.violations.first() {
        return Err(PipelineError::Invalid { stage, count: report.violations.len(), first: format!("{first:?}") });
    }
    Ok(dataset)
}

fn hash_input(path: &Path) -> Result<FileHash, PipelineError> {
    let bytes = fs::read(path)?;
    Ok(FileHash {
        file: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        sha256: sha256_hex(&bytes),
    })
}

/// Gini decomposition table for one chronic filter, with row labels
/// taken from the name map.
pub fn gini_table(
    dataset: &SurveyDataset,
    groupings: &[GroupingSpec],
    options: &GiniTableOptions,
    names: &DistrictNames,
) -> Result<GiniTable, PipelineError> {
    let mut table = district_decomposition_table(dataset, groupings, options).map_err(|e| PipelineError::stage("gini", e))?;
    for row in &mut table.rows {
        row.label = names.row_label(row.district);
    }
    Ok(table)
}

/// Runs every stage and writes the report files into `config.out_dir`.
pub fn run_pipeline(config: &RunConfig) -> Result<ReportBundle, PipelineError> {
    config.validate()?;
    let groupings: Vec<GroupingSpec> = config.groupings.iter().map(GroupingChoice::resolve).collect::<Result<_, _>>()?;
    let names = &config.district_names;

    log::info!("loading inputs");
    let central = load("central sample", &config.central_households, config.central_episodes.as_deref(), Agency::Central)?;
    let state = load("state sample", &config.state_households, config.state_episodes.as_deref(), Agency::State)?;
    let mut inputs = vec![hash_input(&config.central_households)?];
    inputs.extend(config.central_episodes.as_deref().map(hash_input).transpose()?);
    inputs.push(hash_input(&config.state_households)?);
    inputs.extend(config.state_episodes.as_deref().map(hash_input).transpose()?);

    log::info!("testing poolability");
    let options = PoolabilityOptions { alpha: config.alpha, variable: config.pool_variable, n_bins: config.n_bins };
    let pool_report = poolability(&central, &state, &options).map_err(|e| PipelineError::stage("poolability", e))?;
    let pooled = match pool_datasets(&central, &state, &pool_report, config.force) {
        Ok(p) => p,
        Err(e @ PoolingError::NotPoolable { .. }) => return Err(PipelineError::NotPoolable(e)),
        Err(e) => return Err(PipelineError::stage("pooling", e)),
    };
    let data = &pooled.dataset;

    log::info!("estimating CHE and coverage");
    let che = build_che_tables(data, &config.thresholds).map_err(|e| PipelineError::stage("estimation", e))?;
    let coverage = build_coverage_table(data, config.ci_level).map_err(|e| PipelineError::stage("estimation", e))?;

    log::info!("decomposing Gini");
    let gini_options = GiniTableOptions {
        selector: config.value,
        chronic: ChronicFilter::All,
        mode: config.mode,
        low_n_threshold: config.low_n_threshold,
        significance: config.ci_level,
    };
    let gini = gini_table(data, &groupings, &gini_options, names)?;
    let chronic_options = GiniTableOptions { chronic: ChronicFilter::ChronicOnly, ..gini_options };
    let gini_chronic = gini_table(data, &groupings, &chronic_options, names)?;

    let components_inpatient = build_component_table(data, CareType::Inpatient);
    let components_outpatient = build_component_table(data, CareType::Outpatient);
    let stats = build_stats_summary(&che, &coverage, &gini, &gini_chronic, config.ci_level);

    let report = Report {
        poolability: pool_report,
        pooled_households: data.households.len(),
        pooled_episodes: data.episodes.len(),
        che,
        coverage,
        gini,
        gini_chronic,
        components_inpatient,
        components_outpatient,
        stats,
    };

    log::info!("writing report");
    let mut out = Outputs::default();
    out.add_json("poolability", "poolability.json", &report.poolability)?;
    out.add_csv("che", "che_overall.csv", |w| report.che.write_overall(w))?;
    out.add_csv("che", "che_by_district.csv", |w| report.che.write_by_district(w, names))?;
    out.add_csv("che", "che_by_quintile.csv", |w| report.che.write_by_quintile(w))?;
    out.add_csv("coverage", "coverage_by_district.csv", |w| report.coverage.write_csv(w, names))?;
    out.add_csv("gini", "gini_decomposition.csv", |w| report.gini.write_csv(w))?;
    out.add("gini", "gini_decomposition.txt", report.gini.render_text().into_bytes());
    out.add_csv("gini", "gini_decomposition_chronic.csv", |w| report.gini_chronic.write_csv(w))?;
    out.add_csv("components", "components_inpatient.csv", |w| report.components_inpatient.write_csv(w, names))?;
    out.add_csv("components", "components_outpatient.csv", |w| report.components_outpatient.write_csv(w, names))?;
    out.add_json("stats", "stats_summary.json", &report.stats)?;

    for (k, &t) in config.thresholds.iter().enumerate() {
        let values: Vec<_> = report
            .che
            .by_district
            .iter()
            .map(|r| (r.district, r.estimates[k].as_ref().map(|e| pct(e.incidence))))
            .collect();
        out.add_csv("choropleth", &format!("choropleth_{}.csv", threshold_label(t)), |w| write_choropleth(w, &values))?;
    }
    let coverage_values: Vec<_> = report
        .coverage
        .rows
        .iter()
        .filter_map(|r| Some((r.district?, r.estimate.map(|e| pct(e.estimate)))))
        .collect();
    out.add_csv("choropleth", "choropleth_coverage.csv", |w| write_choropleth(w, &coverage_values))?;
    let gini_values: Vec<_> =
        report.gini.rows.iter().filter_map(|r| Some((r.district?, r.total.map(gini4)))).collect();
    out.add_csv("choropleth", "choropleth_gini.csv", |w| write_choropleth(w, &gini_values))?;

    let mut combined = serde_json::to_vec_pretty(&report).map_err(|e| PipelineError::stage("report", e))?;
    combined.push(b'\n');
    let combined_hash = FileHash { file: "report.json".into(), sha256: sha256_hex(&combined) };
    out.files.insert("report.json".into(), combined);

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.portable(),
        inputs,
        artifacts: out.artifacts.clone(),
        combined: combined_hash,
    };
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| PipelineError::stage("report", e))?;
    manifest_bytes.push(b'\n');
    out.files.insert("manifest.json".into(), manifest_bytes);

    out.commit(&config.out_dir)?;
    Ok(ReportBundle { report, manifest, out_dir: config.out_dir.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_labels() {
        assert_eq!(threshold_label(0.1), "che10");
        assert_eq!(threshold_label(0.4), "che40");
        assert_eq!(threshold_pct(0.125), "12.5");
        assert_eq!(threshold_pct(0.07), "7");
    }

    #[test]
    fn config_checks() {
        let ok = RunConfig {
            central_households: "c.csv".into(),
            state_households: "s.csv".into(),
            ..Default::default()
        };
        assert!(ok.validate().is_ok());
        for bad in [
            RunConfig { thresholds: vec![0.2, 0.1], ..ok.clone() },
            RunConfig { thresholds: vec![1.0], ..ok.clone() },
            RunConfig { alpha: 0.0, ..ok.clone() },
            RunConfig { groupings: vec![GroupingChoice::new("income")], ..ok.clone() },
            RunConfig { central_households: PathBuf::new(), ..ok.clone() },
        ] {
            assert_eq!(bad.validate().unwrap_err().exit_code(), EXIT_VALIDATION);
        }
    }

    #[test]
    fn config_json_defaults_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"central_households": "c.csv", "state_households": "s.csv", "mode": "strict", "ci_level": "95"}"#)
            .unwrap();
        let c = RunConfig::from_json_file(&path).unwrap();
        assert_eq!(c.central_households, dir.path().join("c.csv"));
        assert_eq!(c.mode, DecompositionMode::StrictPyatt);
        assert_eq!(c.ci_level, ConfidenceLevel::NinetyFive);
        assert_eq!(c.thresholds, DEFAULT_THRESHOLDS.to_vec());
        assert_eq!(c.portable().central_households, PathBuf::from("c.csv"));
    }
}
