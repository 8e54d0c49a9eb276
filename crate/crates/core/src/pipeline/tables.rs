//! Report tables built from library estimators, and their CSV renderings.
//! Gini values are written to 4 decimals, percentages to 1.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_model::{CareType, Component, District, HouseholdRecord, Sector, SurveyDataset};
use crate::estimation::{
    che_by_quintile, component_share_estimates, coverage_rate, estimate_che, public_delivery_share, CheByQuintile,
    CheEstimate, ComponentShare, Domain, EstimationError, SubsampleEstimate,
};
use crate::inequality::GiniTable;
use crate::stats::{
    across_district_ci, spearman, spearman_aligned, welch_t, AlignedCorrelation, ConfidenceLevel, CorrelationResult,
    MeanInterval, TTestResult,
};

/// District display names, defaulting to the built-in list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistrictNames(pub BTreeMap<u8, String>);

impl DistrictNames {
    pub fn name(&self, d: District) -> &str {
        self.0.get(&d.code()).map_or(d.name(), String::as_str)
    }

    pub fn row_label(&self, d: Option<District>) -> String {
        d.map_or(crate::inequality::STATE_ROW_LABEL.to_string(), |d| self.name(d).to_string())
    }
}

pub fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

pub fn gini4(x: f64) -> String {
    format!("{x:.4}")
}

fn opt_pct(x: Option<f64>) -> String {
    x.map(pct).unwrap_or_default()
}

/// Threshold as a percent string: 0.1 → "10", 0.125 → "12.5".
pub fn threshold_pct(t: f64) -> String {
    let p = t * 100.0;
    if (p - p.round()).abs() < 1e-9 {
        format!("{}", p.round() as i64)
    } else {
        format!("{}", (p * 1e6).round() / 1e6)
    }
}

/// Column stem for a threshold: 0.1 → "che10".
pub fn threshold_label(t: f64) -> String {
    format!("che{}", threshold_pct(t))
}

pub fn districts_of(dataset: &SurveyDataset) -> Vec<District> {
    dataset.households.iter().map(|h| h.district).collect::<BTreeSet<_>>().into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistrictChe {
    pub district: District,
    /// One entry per threshold; `None` when the district has no usable
    /// households.
    pub estimates: Vec<Option<CheEstimate>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheTables {
    pub thresholds: Vec<f64>,
    /// Per threshold: all households, rural, urban.
    pub overall: Vec<CheEstimate>,
    pub by_district: Vec<DistrictChe>,
    pub by_quintile: CheByQuintile,
}

fn allow_empty(r: Result<CheEstimate, EstimationError>) -> Result<Option<CheEstimate>, EstimationError> {
    match r {
        Ok(e) => Ok(Some(e)),
        Err(EstimationError::EmptyDomain) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn build_che_tables(dataset: &SurveyDataset, thresholds: &[f64]) -> Result<CheTables, EstimationError> {
    let hs = &dataset.households;
    let mut overall = Vec::new();
    for &t in thresholds {
        overall.push(estimate_che(hs, t, &Domain::ALL)?);
        for &s in Sector::ALL {
            if let Some(e) = allow_empty(estimate_che(hs, t, &Domain::sector(s)))? {
                overall.push(e);
            }
        }
    }
    let by_district = districts_of(dataset)
        .par_iter()
        .map(|&d| {
            let estimates = thresholds
                .iter()
                .map(|&t| allow_empty(estimate_che(hs, t, &Domain::district(d))))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(DistrictChe { district: d, estimates })
        })
        .collect::<Result<Vec<_>, EstimationError>>()?;
    let by_quintile = che_by_quintile(hs, thresholds)?;
    Ok(CheTables { thresholds: thresholds.to_vec(), overall, by_district, by_quintile })
}

fn ci_cells(e: Option<&CheEstimate>) -> [String; 4] {
    match e {
        Some(e) => [
            pct(e.incidence),
            opt_pct(e.se),
            opt_pct(e.ci99.map(|c| c.0)),
            opt_pct(e.ci99.map(|c| c.1)),
        ],
        None => Default::default(),
    }
}

impl CheTables {
    pub fn write_overall<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["threshold_pct", "domain", "che_pct", "se_pct", "ci99_lo_pct", "ci99_hi_pct", "n", "excluded"])?;
        for e in &self.overall {
            let [che, se, lo, hi] = ci_cells(Some(e));
            w.write_record([
                threshold_pct(e.threshold),
                e.domain.clone(),
                che,
                se,
                lo,
                hi,
                e.n.to_string(),
                e.excluded.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_by_district<W: Write>(&self, writer: W, names: &DistrictNames) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["district_code".to_string(), "district".to_string()];
        for &t in &self.thresholds {
            let stem = threshold_label(t);
            for suffix in ["", "_se", "_lo", "_hi"] {
                header.push(format!("{stem}{suffix}"));
            }
        }
        header.extend(["n".to_string(), "excluded".to_string()]);
        w.write_record(&header)?;
        for row in &self.by_district {
            let mut rec = vec![row.district.code().to_string(), names.name(row.district).to_string()];
            for e in &row.estimates {
                rec.extend(ci_cells(e.as_ref()));
            }
            let first = row.estimates.iter().flatten().next();
            rec.push(first.map(|e| e.n.to_string()).unwrap_or_else(|| "0".into()));
            rec.push(first.map(|e| e.excluded.to_string()).unwrap_or_else(|| "0".into()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Quintile classes as rows, thresholds as columns.
    pub fn write_by_quintile<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["mpce_class".to_string(), "upper_cut".to_string()];
        for &t in &self.thresholds {
            let stem = threshold_label(t);
            header.push(stem.clone());
            header.push(format!("{stem}_se"));
        }
        w.write_record(&header)?;
        for (i, row) in self.by_quintile.rows.iter().enumerate() {
            let class = match i {
                0 => "1 (Poorest)".to_string(),
                4 => "5 (Richest)".to_string(),
                _ => (i + 1).to_string(),
            };
            let cut = self.by_quintile.cuts.and_then(|c| c.cuts.get(i).copied());
            let mut rec = vec![class, cut.map(|c| format!("{c:.2}")).unwrap_or_default()];
            for e in row {
                rec.push(e.as_ref().map(|e| pct(e.incidence)).unwrap_or_default());
                rec.push(opt_pct(e.as_ref().and_then(|e| e.se)));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VersusState {
    Higher,
    Lower,
    NotDifferent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub district: Option<District>,
    pub estimate: Option<SubsampleEstimate>,
    /// Interval at the configured level, clipped to [0, 1].
    pub ci: Option<(f64, f64)>,
    /// Whether the interval lies wholly above or below the state estimate.
    pub versus_state: Option<VersusState>,
    pub public_delivery: Option<SubsampleEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageTable {
    pub level: ConfidenceLevel,
    pub rows: Vec<CoverageRow>,
}

pub fn build_coverage_table(dataset: &SurveyDataset, level: ConfidenceLevel) -> Result<CoverageTable, EstimationError> {
    let hs: &[HouseholdRecord] = &dataset.households;
    let state = coverage_rate(hs, &Domain::ALL)?;
    let clip = |e: &SubsampleEstimate| e.ci(level).map(|(lo, hi)| (lo.max(0.0), hi.min(1.0)));
    let delivery = |domain: &Domain| public_delivery_share(dataset, domain).ok();
    let mut rows: Vec<CoverageRow> = districts_of(dataset)
        .par_iter()
        .map(|&d| {
            let domain = Domain::district(d);
            let estimate = coverage_rate(hs, &domain).ok();
            let ci = estimate.as_ref().and_then(clip);
            let versus_state = ci.map(|(lo, hi)| {
                if lo > state.estimate {
                    VersusState::Higher
                } else if hi < state.estimate {
                    VersusState::Lower
                } else {
                    VersusState::NotDifferent
                }
            });
            CoverageRow { district: Some(d), estimate, ci, versus_state, public_delivery: delivery(&domain) }
        })
        .collect();
    rows.push(CoverageRow {
        district: None,
        estimate: Some(state),
        ci: clip(&state),
        versus_state: None,
        public_delivery: delivery(&Domain::ALL),
    });
    Ok(CoverageTable { level, rows })
}

impl CoverageTable {
    pub fn write_csv<W: Write>(&self, writer: W, names: &DistrictNames) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let level = self.level.percent();
        w.write_record([
            "district_code".to_string(),
            "district".to_string(),
            "coverage_pct".to_string(),
            "se_pct".to_string(),
            format!("ci{level}_lo_pct"),
            format!("ci{level}_hi_pct"),
            "versus_state".to_string(),
            "public_delivery_pct".to_string(),
        ])?;
        for row in &self.rows {
            let versus = row.versus_state.map(|v| match v {
                VersusState::Higher => "higher",
                VersusState::Lower => "lower",
                VersusState::NotDifferent => "",
            });
            w.write_record([
                row.district.map(|d| d.code().to_string()).unwrap_or_default(),
                names.row_label(row.district),
                opt_pct(row.estimate.map(|e| e.estimate)),
                opt_pct(row.estimate.and_then(|e| e.se)),
                opt_pct(row.ci.map(|c| c.0)),
                opt_pct(row.ci.map(|c| c.1)),
                versus.unwrap_or_default().to_string(),
                opt_pct(row.public_delivery.map(|e| e.estimate)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRow {
    pub district: Option<District>,
    pub shares: Option<Vec<ComponentShare>>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTable {
    pub care_type: CareType,
    pub rows: Vec<ComponentRow>,
}

/// Component shares of OOP per district plus the all-districts row.
pub fn build_component_table(dataset: &SurveyDataset, care_type: CareType) -> ComponentTable {
    let row = |district: Option<District>| {
        let domain = Domain { district, sector: None };
        match component_share_estimates(dataset, care_type, &domain) {
            Ok(shares) => ComponentRow { district, shares: Some(shares), note: None },
            Err(e) => ComponentRow { district, shares: None, note: Some(e.to_string()) },
        }
    };
    let mut rows: Vec<ComponentRow> = districts_of(dataset).par_iter().map(|&d| row(Some(d))).collect();
    rows.push(row(None));
    ComponentTable { care_type, rows }
}

impl ComponentTable {
    pub fn write_csv<W: Write>(&self, writer: W, names: &DistrictNames) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let schema: &[Component] = self.care_type.components();
        let mut header = vec!["district_code".to_string(), "district".to_string()];
        header.extend(schema.iter().map(|c| format!("{}_pct", c.label())));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.district.map(|d| d.code().to_string()).unwrap_or_default(), names.row_label(row.district)];
            match &row.shares {
                Some(shares) => rec.extend(shares.iter().map(|s| pct(s.share))),
                None => rec.extend(schema.iter().map(|_| String::new())),
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `district_code,value` rows for mapping tools.
pub fn write_choropleth<W: Write>(writer: W, values: &[(District, Option<String>)]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["district_code", "value"])?;
    for (d, v) in values {
        w.write_record([d.code().to_string(), v.clone().unwrap_or_default()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCorrelation {
    pub x: String,
    pub y: String,
    pub districts: usize,
    pub result: CorrelationResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCheCorrelation {
    pub threshold: f64,
    pub districts: usize,
    /// `aligned` negates CHE so that both measures point the same way.
    pub result: AlignedCorrelation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetweenShareInterval {
    pub grouping: String,
    pub level: ConfidenceLevel,
    pub districts: usize,
    /// Mean of |between share| in percent.
    pub interval: MeanInterval,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub coverage_vs_che: Option<CoverageCheCorrelation>,
    pub che_rank_correlations: Vec<RankCorrelation>,
    /// Welch test of district total Ginis, all episodes vs chronic only.
    pub gini_all_vs_chronic: Option<TTestResult>,
    pub between_share_intervals: Vec<BetweenShareInterval>,
    pub notes: Vec<String>,
}

/// District-level inferential statistics over the emitted tables.
pub fn build_stats_summary(
    che: &CheTables,
    coverage: &CoverageTable,
    gini: &GiniTable,
    gini_chronic: &GiniTable,
    level: ConfidenceLevel,
) -> StatsSummary {
    let mut summary = StatsSummary::default();
    let che_at = |k: usize| -> BTreeMap<District, f64> {
        che.by_district
            .iter()
            .filter_map(|r| r.estimates.get(k).and_then(|e| e.as_ref()).map(|e| (r.district, e.incidence)))
            .collect()
    };

    if let Some(&t) = che.thresholds.first() {
        let che0 = che_at(0);
        let (x, y): (Vec<f64>, Vec<f64>) = coverage
            .rows
            .iter()
            .filter_map(|r| Some((r.estimate?.estimate, *che0.get(&r.district?)?)))
            .unzip();
        match spearman_aligned(&x, &y) {
            Ok(result) => {
                summary.coverage_vs_che = Some(CoverageCheCorrelation { threshold: t, districts: x.len(), result })
            }
            Err(e) => summary.notes.push(format!("coverage vs CHE correlation: {e}")),
        }
    }

    for k in 1..che.thresholds.len() {
        let (a, b) = (che_at(k - 1), che_at(k));
        let (x, y): (Vec<f64>, Vec<f64>) = a.iter().filter_map(|(d, &v)| Some((v, *b.get(d)?))).unzip();
        let (xl, yl) = (threshold_label(che.thresholds[k - 1]), threshold_label(che.thresholds[k]));
        match spearman(&x, &y) {
            Ok(result) => summary.che_rank_correlations.push(RankCorrelation { x: xl, y: yl, districts: x.len(), result }),
            Err(e) => summary.notes.push(format!("{xl} vs {yl} correlation: {e}")),
        }
    }

    let totals = |t: &GiniTable| -> Vec<f64> { t.rows.iter().filter(|r| r.district.is_some()).filter_map(|r| r.total).collect() };
    match welch_t(&totals(gini), &totals(gini_chronic)) {
        Ok(r) => summary.gini_all_vs_chronic = Some(r),
        Err(e) => summary.notes.push(format!("all vs chronic Gini t-test: {e}")),
    }

    for (i, name) in gini.groupings.iter().enumerate() {
        let shares: Vec<f64> = gini
            .rows
            .iter()
            .filter(|r| r.district.is_some())
            .filter_map(|r| r.cells.get(i))
            .filter(|c| !c.single_group)
            .filter_map(|c| c.decomposition.as_ref().map(|d| d.between_share.abs()))
            .collect();
        match across_district_ci(&shares, level) {
            Ok(interval) => summary.between_share_intervals.push(BetweenShareInterval {
                grouping: name.clone(),
                level,
                districts: shares.len(),
                interval,
            }),
            Err(e) => summary.notes.push(format!("{name} between-share interval: {e}")),
        }
    }
    summary
}
