//! Fund-month panel records and their CSV form (`fund_id,month,tasm,nav`).

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// Calendar month, stored as `12 * year + (month - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month(i32);

impl Month {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(invalid(format!("month of year must be 1-12, got {month}")));
        }
        Ok(Self(year * 12 + month as i32 - 1))
    }

    pub fn from_index(index: i32) -> Self {
        Self(index)
    }

    pub fn index(self) -> i32 {
        self.0
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12)
    }

    /// 1-based month of the year.
    pub fn month_of_year(self) -> u32 {
        self.0.rem_euclid(12) as u32 + 1
    }

    pub fn offset(self, months: i32) -> Self {
        Self(self.0 + months)
    }

    /// Months from `earlier` to `self`.
    pub fn since(self, earlier: Month) -> i32 {
        self.0 - earlier.0
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month_of_year())
    }
}

impl FromStr for Month {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid(format!("expected month as YYYY-MM, got `{s}`"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        Month::new(year, month).map_err(|_| bad())
    }
}

impl Serialize for Month {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Month {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One fund-month observation. Sizes are total assets in millions of USD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundRecord {
    pub fund_id: String,
    pub month: Month,
    pub tasm: f64,
    pub nav: f64,
}

/// A row of input that could not be accepted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemaViolation {
    /// 1-based line number in the input, counting the header as line 1.
    pub line: u64,
    pub message: String,
}

impl fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

pub const PANEL_HEADER: [&str; 4] = ["fund_id", "month", "tasm", "nav"];

/// Reads a fund-month panel, reporting every offending row at once.
pub fn read_panel<R: Read>(reader: R) -> Result<Vec<FundRecord>> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_owned).collect();
    if header != PANEL_HEADER {
        return Err(Error::Schema(vec![SchemaViolation {
            line: 1,
            message: format!("expected header `{}`, got `{}`", PANEL_HEADER.join(","), header.join(",")),
        }]));
    }
    let mut records = Vec::new();
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in csv.records().enumerate() {
        let line = i as u64 + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                violations.push(SchemaViolation { line, message: e.to_string() });
                continue;
            }
        };
        match parse_row(&row) {
            Ok(rec) => {
                if !seen.insert((rec.fund_id.clone(), rec.month)) {
                    violations.push(SchemaViolation {
                        line,
                        message: format!("duplicate month {} for fund `{}`", rec.month, rec.fund_id),
                    });
                } else {
                    records.push(rec);
                }
            }
            Err(message) => violations.push(SchemaViolation { line, message }),
        }
    }
    if violations.is_empty() {
        Ok(records)
    } else {
        Err(Error::Schema(violations))
    }
}

fn parse_row(row: &csv::StringRecord) -> std::result::Result<FundRecord, String> {
    if row.len() != 4 {
        return Err(format!("expected 4 fields, got {}", row.len()));
    }
    let fund_id = row[0].to_owned();
    if fund_id.is_empty() {
        return Err("empty fund_id".into());
    }
    let month: Month = row[1].parse().map_err(|e: Error| e.to_string())?;
    let tasm: f64 = row[2].parse().map_err(|_| format!("tasm `{}` is not a number", &row[2]))?;
    let nav: f64 = row[3].parse().map_err(|_| format!("nav `{}` is not a number", &row[3]))?;
    if !(tasm >= 0.0 && tasm.is_finite()) {
        return Err(format!("tasm must be finite and non-negative, got {tasm}"));
    }
    if !(nav > 0.0 && nav.is_finite()) {
        return Err(format!("nav must be finite and positive, got {nav}"));
    }
    Ok(FundRecord { fund_id, month, tasm, nav })
}

pub fn write_panel<W: Write>(writer: W, records: &[FundRecord]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for r in records {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}

/// Consumer price index by month.
pub type CpiTable = BTreeMap<Month, f64>;

/// Reads a `month,cpi` table.
pub fn read_cpi<R: Read>(reader: R) -> Result<CpiTable> {
    #[derive(Deserialize)]
    struct Row {
        month: Month,
        cpi: f64,
    }
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut table = CpiTable::new();
    let mut violations = Vec::new();
    for (i, row) in csv.deserialize::<Row>().enumerate() {
        let line = i as u64 + 2;
        match row {
            Ok(r) if r.cpi > 0.0 && r.cpi.is_finite() => {
                table.insert(r.month, r.cpi);
            }
            Ok(r) => violations.push(SchemaViolation { line, message: format!("cpi must be positive, got {}", r.cpi) }),
            Err(e) => violations.push(SchemaViolation { line, message: e.to_string() }),
        }
    }
    if violations.is_empty() {
        Ok(table)
    } else {
        Err(Error::Schema(violations))
    }
}

/// Restates sizes in the money of `base` (the latest CPI month by default).
pub fn adjust_for_inflation(records: &mut [FundRecord], cpi: &CpiTable, base: Option<Month>) -> Result<Month> {
    let base = match base {
        Some(b) => b,
        None => *cpi.keys().next_back().ok_or_else(|| invalid("empty CPI table"))?,
    };
    let base_cpi = *cpi
        .get(&base)
        .ok_or_else(|| invalid(format!("CPI table has no entry for base month {base}")))?;
    for r in records.iter_mut() {
        let index = cpi
            .get(&r.month)
            .ok_or_else(|| invalid(format!("CPI table has no entry for {}", r.month)))?;
        r.tasm *= base_cpi / index;
    }
    Ok(base)
}
