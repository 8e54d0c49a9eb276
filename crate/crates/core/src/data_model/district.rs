use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

const DISTRICT_TABLE: &str = include_str!("../../data/districts.csv");

/// Number of districts in the closed district code list.
pub const DISTRICT_COUNT: u8 = 19;

fn names() -> &'static [String] {
    static NAMES: OnceLock<Vec<String>> = OnceLock::new();
    NAMES.get_or_init(|| {
        let mut reader = csv::Reader::from_reader(DISTRICT_TABLE.as_bytes());
        let mut rows: Vec<(u8, String)> = reader
            .records()
            .map(|r| {
                let r = r.expect("embedded district table is valid csv");
                (r[0].parse().expect("district code"), r[1].to_string())
            })
            .collect();
        rows.sort_by_key(|(code, _)| *code);
        assert_eq!(rows.len(), DISTRICT_COUNT as usize);
        rows.into_iter().map(|(_, name)| name).collect()
    })
}

/// A district code from the closed 1..=19 list. Row order of the
/// district tables follows the code order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct District(u8);

impl District {
    pub fn new(code: u8) -> Option<Self> {
        (1..=DISTRICT_COUNT).contains(&code).then_some(District(code))
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        &names()[(self.0 - 1) as usize]
    }

    pub fn all() -> impl Iterator<Item = District> {
        (1..=DISTRICT_COUNT).map(District)
    }
}

impl TryFrom<u8> for District {
    type Error = String;

    fn try_from(code: u8) -> Result<Self, Self::Error> {
        District::new(code).ok_or_else(|| format!("unknown district code {code}"))
    }
}

impl From<District> for u8 {
    fn from(d: District) -> u8 {
        d.0
    }
}

impl fmt::Display for District {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
