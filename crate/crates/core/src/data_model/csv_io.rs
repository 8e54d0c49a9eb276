use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use super::{
    Agency, CareType, Component, CostComponents, District, EpisodeRecord, HouseholdRecord,
    SurveyDataset, COMPONENT_SUM_TOLERANCE,
};

pub const HOUSEHOLD_COLUMNS: [&str; 13] = [
    "hh_id",
    "district_code",
    "sector",
    "agency",
    "subsample",
    "stratum_id",
    "multiplier",
    "hh_size",
    "aexp",
    "oop_total",
    "oop_inpatient",
    "oop_outpatient",
    "coverage",
];

pub const EPISODE_BASE_COLUMNS: [&str; 10] = [
    "episode_id",
    "hh_id",
    "care_type",
    "facility",
    "patient_sex",
    "social_group",
    "religion",
    "chronic",
    "is_delivery",
    "multiplier",
];

const OPTIONAL_EPISODE_COLUMNS: [&str; 2] = ["chronic", "is_delivery"];

/// Ingestion errors. `row` is the 1-based data row, not counting the header.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("missing column '{column}'")]
    MissingColumn { column: String },
    #[error("row {row}: '{value}' is not a valid value for {field}")]
    BadEnum { row: usize, field: String, value: String },
    #[error("row {row}: {field} = '{value}' is not a finite number")]
    BadNumber { row: usize, field: String, value: String },
    #[error("row {row}: {field} = {value} is out of range (must be {requirement})")]
    NegativeValue { row: usize, field: String, value: f64, requirement: &'static str },
    #[error("row {row}: duplicate {field} '{id}'")]
    DuplicateId { row: usize, field: String, id: String },
    #[error("row {row}: oop_inpatient + oop_outpatient exceeds oop_total by {excess}")]
    ComponentSum { row: usize, excess: f64 },
    #[error("row {row}: column {field} does not belong to {care_type} episodes")]
    ForeignComponent { row: usize, field: String, care_type: CareType },
    #[error("row {row}: agency is {found}, expected {expected}")]
    AgencyMismatch { row: usize, expected: Agency, found: Agency },
    #[error("row {row}: episode references unknown household '{hh_id}'")]
    DanglingEpisode { row: usize, hh_id: String },
    #[error("no household rows")]
    EmptyDataset,
}

fn open(path: &Path) -> Result<File, DataError> {
    File::open(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })
}

struct Header {
    index: HashMap<String, usize>,
}

impl Header {
    fn new(record: &csv::StringRecord) -> Self {
        let index = record
            .iter()
            .enumerate()
            .map(|(i, name)| (name.trim().to_string(), i))
            .collect();
        Header { index }
    }

    fn require(&self, columns: &[&str]) -> Result<(), DataError> {
        match columns.iter().find(|c| !self.index.contains_key(**c)) {
            Some(c) => Err(DataError::MissingColumn { column: c.to_string() }),
            None => Ok(()),
        }
    }

    fn has(&self, column: &str) -> bool {
        self.index.contains_key(column)
    }
}

struct Row<'a> {
    header: &'a Header,
    record: &'a csv::StringRecord,
    row: usize,
}

impl Row<'_> {
    fn raw(&self, field: &str) -> Option<&str> {
        self.header.index.get(field).and_then(|&i| self.record.get(i)).map(str::trim)
    }

    fn text(&self, field: &str) -> Result<String, DataError> {
        self.raw(field)
            .map(str::to_string)
            .ok_or_else(|| DataError::MissingColumn { column: field.to_string() })
    }

    fn parse_enum<T: FromStr>(&self, field: &str) -> Result<T, DataError> {
        let raw = self.text(field)?;
        raw.parse().map_err(|_| DataError::BadEnum { row: self.row, field: field.to_string(), value: raw })
    }

    fn number(&self, field: &str) -> Result<f64, DataError> {
        let raw = self.text(field)?;
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(DataError::BadNumber { row: self.row, field: field.to_string(), value: raw }),
        }
    }

    fn non_negative(&self, field: &str) -> Result<f64, DataError> {
        let v = self.number(field)?;
        if v < 0.0 {
            return Err(self.range(field, v, "non-negative"));
        }
        Ok(v)
    }

    fn positive(&self, field: &str) -> Result<f64, DataError> {
        let v = self.number(field)?;
        if v <= 0.0 {
            return Err(self.range(field, v, "positive"));
        }
        Ok(v)
    }

    fn range(&self, field: &str, value: f64, requirement: &'static str) -> DataError {
        DataError::NegativeValue { row: self.row, field: field.to_string(), value, requirement }
    }

    fn flag(&self, field: &str) -> Result<bool, DataError> {
        let raw = self.text(field)?;
        match raw.to_ascii_lowercase().as_str() {
            "1" | "true" | "t" | "yes" | "y" => Ok(true),
            "0" | "false" | "f" | "no" | "n" | "" => Ok(false),
            _ => Err(DataError::BadEnum { row: self.row, field: field.to_string(), value: raw }),
        }
    }
}

/// Reads households from CSV. When `expected` is set, every row's agency
/// must match it.
pub fn read_households<R: Read>(
    reader: R,
    expected: Option<Agency>,
) -> Result<Vec<HouseholdRecord>, DataError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = Header::new(csv.headers()?);
    header.require(&HOUSEHOLD_COLUMNS)?;

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let row = Row { header: &header, record: &record, row: i + 1 };
        let h = parse_household(&row)?;
        if let Some(expected) = expected {
            if h.agency != expected {
                return Err(DataError::AgencyMismatch { row: row.row, expected, found: h.agency });
            }
        }
        if !seen.insert(h.hh_id.clone()) {
            return Err(DataError::DuplicateId { row: row.row, field: "hh_id".into(), id: h.hh_id });
        }
        out.push(h);
    }
    Ok(out)
}

fn parse_household(row: &Row<'_>) -> Result<HouseholdRecord, DataError> {
    let code = row.text("district_code")?;
    let district = code
        .parse::<u8>()
        .ok()
        .and_then(District::new)
        .ok_or_else(|| DataError::BadEnum { row: row.row, field: "district_code".into(), value: code })?;
    let size = row.text("hh_size")?;
    let hh_size = match size.parse::<u32>() {
        Ok(0) => return Err(row.range("hh_size", 0.0, "positive")),
        Ok(n) => n,
        Err(_) => return Err(DataError::BadNumber { row: row.row, field: "hh_size".into(), value: size }),
    };
    let h = HouseholdRecord {
        hh_id: row.text("hh_id")?,
        district,
        sector: row.parse_enum("sector")?,
        agency: row.parse_enum("agency")?,
        subsample: row.parse_enum("subsample")?,
        stratum_id: row.text("stratum_id")?,
        multiplier: row.positive("multiplier")?,
        hh_size,
        aexp: row.non_negative("aexp")?,
        oop_total: row.non_negative("oop_total")?,
        oop_inpatient: row.non_negative("oop_inpatient")?,
        oop_outpatient: row.non_negative("oop_outpatient")?,
        coverage: row.flag("coverage")?,
    };
    let excess = h.oop_inpatient + h.oop_outpatient - h.oop_total;
    if excess > COMPONENT_SUM_TOLERANCE {
        return Err(DataError::ComponentSum { row: row.row, excess });
    }
    Ok(h)
}

pub fn read_episodes<R: Read>(reader: R) -> Result<Vec<EpisodeRecord>, DataError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = Header::new(csv.headers()?);
    let required: Vec<&str> = EPISODE_BASE_COLUMNS
        .iter()
        .copied()
        .filter(|c| !OPTIONAL_EPISODE_COLUMNS.contains(c))
        .collect();
    header.require(&required)?;
    for column in OPTIONAL_EPISODE_COLUMNS {
        if !header.has(column) {
            log::warn!("episodes file has no '{column}' column; defaulting to false");
        }
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let row = Row { header: &header, record: &record, row: i + 1 };
        let e = parse_episode(&row)?;
        if !seen.insert(e.episode_id.clone()) {
            return Err(DataError::DuplicateId { row: row.row, field: "episode_id".into(), id: e.episode_id });
        }
        out.push(e);
    }
    Ok(out)
}

fn parse_episode(row: &Row<'_>) -> Result<EpisodeRecord, DataError> {
    let care_type: CareType = row.parse_enum("care_type")?;
    let schema = care_type.components();
    let mut values = Vec::with_capacity(schema.len());
    for component in schema {
        values.push(row.non_negative(component.label())?);
    }
    for component in Component::ALL.iter().filter(|c| !schema.contains(c)) {
        match row.raw(component.label()) {
            None | Some("") => {}
            Some(v) if v.parse::<f64>() == Ok(0.0) => {}
            Some(_) => {
                return Err(DataError::ForeignComponent {
                    row: row.row,
                    field: component.label().to_string(),
                    care_type,
                })
            }
        }
    }
    let optional_flag = |field: &str| if row.header.has(field) { row.flag(field) } else { Ok(false) };
    Ok(EpisodeRecord {
        episode_id: row.text("episode_id")?,
        hh_id: row.text("hh_id")?,
        care_type,
        facility: row.parse_enum("facility")?,
        patient_sex: row.parse_enum("patient_sex")?,
        social_group: row.parse_enum("social_group")?,
        religion: row.parse_enum("religion")?,
        chronic: optional_flag("chronic")?,
        is_delivery: optional_flag("is_delivery")?,
        costs: CostComponents::new(care_type, values).expect("values follow the schema"),
        multiplier: row.positive("multiplier")?,
    })
}

/// Loads a household file into a dataset with no episodes, labelled by
/// agency when one is given.
pub fn load_households(path: &Path, agency: Option<Agency>) -> Result<SurveyDataset, DataError> {
    let households = read_households(open(path)?, agency)?;
    if households.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let label = agency.map_or("households".to_string(), |a| a.label().to_ascii_lowercase());
    Ok(SurveyDataset::new(label, households, Vec::new()))
}

pub fn load_episodes(path: &Path) -> Result<Vec<EpisodeRecord>, DataError> {
    read_episodes(open(path)?)
}

/// Loads households plus optional episodes and checks that every episode
/// resolves to a household.
pub fn load_dataset(
    households: &Path,
    episodes: Option<&Path>,
    agency: Option<Agency>,
) -> Result<SurveyDataset, DataError> {
    let mut dataset = load_households(households, agency)?;
    if let Some(path) = episodes {
        let episodes = load_episodes(path)?;
        let ids: HashSet<&str> = dataset.households.iter().map(|h| h.hh_id.as_str()).collect();
        if let Some((i, e)) = episodes.iter().enumerate().find(|(_, e)| !ids.contains(e.hh_id.as_str())) {
            return Err(DataError::DanglingEpisode { row: i + 1, hh_id: e.hh_id.clone() });
        }
        dataset.episodes = episodes;
    }
    Ok(dataset)
}

fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

fn flag(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

pub fn write_households<W: Write>(writer: W, households: &[HouseholdRecord]) -> Result<(), DataError> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(HOUSEHOLD_COLUMNS)?;
    for h in households {
        csv.write_record([
            h.hh_id.clone(),
            h.district.code().to_string(),
            h.sector.to_string(),
            h.agency.to_string(),
            h.subsample.to_string(),
            h.stratum_id.clone(),
            fixed(h.multiplier),
            h.hh_size.to_string(),
            fixed(h.aexp),
            fixed(h.oop_total),
            fixed(h.oop_inpatient),
            fixed(h.oop_outpatient),
            flag(h.coverage).to_string(),
        ])?;
    }
    csv.flush().map_err(|e| DataError::Csv(e.into()))?;
    Ok(())
}

/// Writes episodes with the base columns followed by one column per
/// component. Components outside an episode's schema are left blank.
pub fn write_episodes<W: Write>(writer: W, episodes: &[EpisodeRecord]) -> Result<(), DataError> {
    let mut csv = csv::Writer::from_writer(writer);
    let header: Vec<&str> = EPISODE_BASE_COLUMNS
        .iter()
        .copied()
        .chain(Component::ALL.iter().map(|c| c.label()))
        .collect();
    csv.write_record(&header)?;
    for e in episodes {
        let mut row = vec![
            e.episode_id.clone(),
            e.hh_id.clone(),
            e.care_type.to_string(),
            e.facility.to_string(),
            e.patient_sex.to_string(),
            e.social_group.to_string(),
            e.religion.to_string(),
            flag(e.chronic).to_string(),
            flag(e.is_delivery).to_string(),
            fixed(e.multiplier),
        ];
        row.extend(Component::ALL.iter().map(|c| e.costs.get(*c).map(fixed).unwrap_or_default()));
        csv.write_record(&row)?;
    }
    csv.flush().map_err(|e| DataError::Csv(e.into()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "hh_id,district_code,sector,agency,subsample,stratum_id,multiplier,hh_size,aexp,oop_total,oop_inpatient,oop_outpatient,coverage\n";

    fn households(rows: &[&str]) -> Result<Vec<HouseholdRecord>, DataError> {
        let text = format!("{HEADER}{}", rows.join("\n"));
        read_households(text.as_bytes(), None)
    }

    #[test]
    fn loads_well_formed_rows() {
        let hs = households(&[
            "h1,1,Rural,Central,S1,1-R,120.5,4,100000,5000,3000,2000,true",
            "h2,16,Urban,Central,S2,16-U,80,2,90000,0,0,0,0",
            "h3,19,Rural,Central,S1,19-R,95,5,60000,12000,0,11000,1",
        ])
        .unwrap();
        assert_eq!(hs.len(), 3);
        assert_eq!(hs[1].district.name(), "Kolkata");
        assert!(hs[2].coverage);
    }

    #[test]
    fn zero_multiplier_names_row() {
        let err = households(&[
            "h1,1,Rural,Central,S1,1-R,120.5,4,100000,5000,3000,2000,true",
            "h2,1,Rural,Central,S1,1-R,0,4,100000,5000,3000,2000,true",
        ])
        .unwrap_err();
        match err {
            DataError::NegativeValue { row, ref field, .. } => {
                assert_eq!(row, 2);
                assert_eq!(field, "multiplier");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("row 2"));
    }

    #[test]
    fn rejects_bad_rows() {
        let unknown_district = households(&["h1,20,Rural,Central,S1,x,1,1,1,0,0,0,false"]).unwrap_err();
        assert!(matches!(unknown_district, DataError::BadEnum { row: 1, ref field, .. } if field == "district_code"));

        let bad_sector = households(&["h1,2,Semi,Central,S1,x,1,1,1,0,0,0,false"]).unwrap_err();
        assert!(matches!(bad_sector, DataError::BadEnum { ref field, .. } if field == "sector"));

        let dup = households(&["h1,2,Rural,Central,S1,x,1,1,1,0,0,0,false", "h1,2,Rural,Central,S1,x,1,1,1,0,0,0,false"])
            .unwrap_err();
        assert!(matches!(dup, DataError::DuplicateId { row: 2, .. }));

        let over = households(&["h1,2,Rural,Central,S1,x,1,1,100,10,8,7,false"]).unwrap_err();
        assert!(matches!(over, DataError::ComponentSum { row: 1, excess } if (excess - 5.0).abs() < 1e-12));

        let neg = households(&["h1,2,Rural,Central,S1,x,1,1,-5,0,0,0,false"]).unwrap_err();
        assert!(matches!(neg, DataError::NegativeValue { ref field, .. } if field == "aexp"));
    }

    #[test]
    fn missing_column_is_named() {
        let text = "hh_id,district_code\nh1,1\n";
        let err = read_households(text.as_bytes(), None).unwrap_err();
        assert!(matches!(err, DataError::MissingColumn { ref column } if column == "sector"));
    }

    #[test]
    fn agency_mismatch() {
        let text = format!("{HEADER}h1,1,Rural,State,S1,1-R,1,1,1,0,0,0,false\n");
        let err = read_households(text.as_bytes(), Some(Agency::Central)).unwrap_err();
        assert!(matches!(err, DataError::AgencyMismatch { row: 1, .. }));
    }

    #[test]
    fn episodes_optional_flags_default_false() {
        let text = "episode_id,hh_id,care_type,facility,patient_sex,social_group,religion,multiplier,doctor_fee,medicines_ayush,medicines_other,diagnostics,other_medical,transport,other_nonmedical\n\
                    e1,h1,Outpatient,Private,Female,OBC,Muslim,10,100,0,250,0,0,20,5\n";
        let eps = read_episodes(text.as_bytes()).unwrap();
        assert_eq!(eps.len(), 1);
        assert!(!eps[0].chronic && !eps[0].is_delivery);
        assert_eq!(eps[0].total_cost(), 375.0);
    }

    #[test]
    fn episode_foreign_component_rejected() {
        let text = "episode_id,hh_id,care_type,facility,patient_sex,social_group,religion,multiplier,doctor_fee,medicines_ayush,medicines_other,diagnostics,other_medical,transport,other_nonmedical,package\n\
                    e1,h1,Outpatient,Private,Female,OBC,Muslim,10,100,0,250,0,0,20,5,40\n";
        let err = read_episodes(text.as_bytes()).unwrap_err();
        assert!(matches!(err, DataError::ForeignComponent { ref field, .. } if field == "package"));
    }

    #[test]
    fn inpatient_row_requires_its_components() {
        let text = "episode_id,hh_id,care_type,facility,patient_sex,social_group,religion,multiplier,doctor_fee\n\
                    e1,h1,Inpatient,Private,Female,OBC,Muslim,10,100\n";
        let err = read_episodes(text.as_bytes()).unwrap_err();
        assert!(matches!(err, DataError::MissingColumn { ref column } if column == "package"));
    }
}
