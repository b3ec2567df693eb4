//! CSV ingestion and monthly alignment.
//!
//! Three input shapes are supported:
//!
//! - factor library files: optional free-text preamble, a header row, then
//!   rows keyed by `YYYYMM`; the monthly block ends at a blank line or at the
//!   first key that is not a month (the annual summary block);
//! - price files, `date,price`, daily or monthly, ISO `YYYY-MM-DD` or `YYYYMM`;
//! - yield files, `date,yield`, annual percent.
//!
//! Everything is keyed by [`YearMonth`] and aligned by set intersection.
//! Missing months are dropped, never interpolated.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum panel length accepted downstream by the GARCH fitter.
pub const MIN_PANEL_LEN: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("malformed numeric cell {value:?} at line {line}, column {column}")]
    MalformedCell {
        line: usize,
        column: usize,
        value: String,
    },
    #[error("line {line}: expected {expected} values, found {found}")]
    RowWidth {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("no monthly rows found")]
    NoMonthlyRows,
    #[error("duplicate date-key {0}")]
    DuplicateDate(YearMonth),
    #[error("date-keys not increasing at {0}")]
    UnorderedDates(YearMonth),
    #[error("line {line}: non-positive price {value}")]
    NonPositivePrice { line: usize, value: f64 },
    #[error("line {line}: unparsable date {value:?}")]
    BadDate { line: usize, value: String },
    #[error("empty intersection")]
    EmptyIntersection,
    #[error("length mismatch after return transform: {0}")]
    LengthMismatch(String),
    #[error("requested column {0:?} absent")]
    MissingColumn(String),
    #[error("non-finite value in series {0}")]
    NonFinite(String),
    #[error("panel too short: {found} observations, need at least {required}")]
    TooShort { found: usize, required: usize },
    #[error("invalid config: {0}")]
    Config(String),
}

/// A calendar month stored as the integer `YYYYMM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct YearMonth(u32);

impl YearMonth {
    pub fn new(year: u32, month: u32) -> Option<Self> {
        ((1..=12).contains(&month) && (1000..=9999).contains(&year)).then_some(Self(year * 100 + month))
    }

    pub fn from_yyyymm(key: u32) -> Option<Self> {
        Self::new(key / 100, key % 100)
    }

    pub fn year(self) -> u32 {
        self.0 / 100
    }

    pub fn month(self) -> u32 {
        self.0 % 100
    }

    pub fn key(self) -> u32 {
        self.0
    }

    pub fn prev(self) -> Self {
        if self.month() == 1 {
            Self((self.year() - 1) * 100 + 12)
        } else {
            Self(self.0 - 1)
        }
    }

    pub fn next(self) -> Self {
        if self.month() == 12 {
            Self((self.year() + 1) * 100 + 1)
        } else {
            Self(self.0 + 1)
        }
    }

    /// Parses a cell that must be exactly six digits forming a valid month.
    fn parse_key(cell: &str) -> Option<Self> {
        let cell = cell.trim();
        if cell.len() != 6 || !cell.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        Self::from_yyyymm(cell.parse().ok()?)
    }
}

impl TryFrom<u32> for YearMonth {
    type Error = String;

    fn try_from(value: u32) -> Result<Self, Self::Error> {
        Self::from_yyyymm(value).ok_or_else(|| format!("invalid YYYYMM key {value}"))
    }
}

impl From<YearMonth> for u32 {
    fn from(value: YearMonth) -> Self {
        value.0
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:06}", self.0)
    }
}

impl FromStr for YearMonth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_key(s).ok_or_else(|| format!("invalid YYYYMM key {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub date: YearMonth,
    pub values: Vec<f64>,
}

/// A monthly-keyed table as read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

impl RawTable {
    /// Builds a table, checking row widths and strictly increasing keys.
    pub fn new(columns: Vec<String>, rows: Vec<Row>) -> Result<Self, IngestError> {
        for (i, row) in rows.iter().enumerate() {
            if row.values.len() != columns.len() {
                return Err(IngestError::RowWidth {
                    line: i + 1,
                    expected: columns.len(),
                    found: row.values.len(),
                });
            }
        }
        check_keys(rows.iter().map(|r| r.date))?;
        Ok(Self { columns, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dates(&self) -> Vec<YearMonth> {
        self.rows.iter().map(|r| r.date).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r.values[idx]).collect())
    }

    /// Writes the table in the factor-file layout (`,c1,...,ck` header).
    /// Values are written unscaled, so re-reading needs `scale = 1`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push(',');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.date.to_string());
            for v in &row.values {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

fn check_keys(dates: impl Iterator<Item = YearMonth>) -> Result<(), IngestError> {
    let mut seen = BTreeSet::new();
    let mut last: Option<YearMonth> = None;
    let dates: Vec<_> = dates.collect();
    for &d in &dates {
        if !seen.insert(d) {
            return Err(IngestError::DuplicateDate(d));
        }
    }
    for d in dates {
        if last.is_some_and(|l| d <= l) {
            return Err(IngestError::UnorderedDates(d));
        }
        last = Some(d);
    }
    Ok(())
}

fn split_cells(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn parse_cell(cell: &str, line: usize, column: usize) -> Result<f64, IngestError> {
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| IngestError::MalformedCell {
            line,
            column,
            value: cell.to_string(),
        })
}

/// Parses a factor-library style CSV, keeping only the monthly block and
/// dividing every value by `scale`.
pub fn parse_factor_csv(text: &str, scale: f64) -> Result<RawTable, IngestError> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(IngestError::Config(format!("factor scale must be positive, got {scale}")));
    }
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();

    let Some(first) = lines
        .iter()
        .position(|l| l.split(',').next().and_then(YearMonth::parse_key).is_some())
    else {
        return Err(IngestError::NoMonthlyRows);
    };
    let width = split_cells(lines[first]).len() - 1;

    // The header is the nearest non-blank line above the first data row, if
    // it has the right number of cells. Anything earlier is preamble.
    let columns = lines[..first]
        .iter()
        .rev()
        .find(|l| !l.trim().is_empty())
        .map(|l| split_cells(l))
        .filter(|cells| cells.len() == width + 1)
        .map(|cells| cells[1..].iter().map(|c| c.to_string()).collect::<Vec<_>>())
        .unwrap_or_else(|| (1..=width).map(|i| format!("V{i}")).collect());

    let mut rows = Vec::new();
    for (offset, line) in lines[first..].iter().enumerate() {
        let line_no = first + offset + 1;
        if line.trim().is_empty() {
            break;
        }
        let cells = split_cells(line);
        let Some(date) = YearMonth::parse_key(cells[0]) else {
            break;
        };
        if cells.len() != width + 1 {
            return Err(IngestError::RowWidth {
                line: line_no,
                expected: width,
                found: cells.len() - 1,
            });
        }
        let values = cells[1..]
            .iter()
            .enumerate()
            .map(|(j, c)| parse_cell(c, line_no, j + 2).map(|v| v / scale))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(Row { date, values });
    }
    if rows.is_empty() {
        return Err(IngestError::NoMonthlyRows);
    }
    RawTable::new(columns, rows)
}

/// A parsed date: month plus a within-month ordering key (the day, or 0 for
/// `YYYYMM` keys).
fn parse_date(cell: &str) -> Option<(YearMonth, u32)> {
    let cell = cell.trim().trim_matches('"');
    if let Some(ym) = YearMonth::parse_key(cell) {
        return Some((ym, 0));
    }
    // YYYY-MM-DD, optionally followed by a time part.
    let date = cell.split(['T', ' ']).next()?;
    let mut parts = date.split('-');
    let year: u32 = parts.next()?.parse().ok()?;
    let month: u32 = parts.next()?.parse().ok()?;
    let day: u32 = match parts.next() {
        Some(d) => d.parse().ok()?,
        None => 0,
    };
    if parts.next().is_some() || day > 31 {
        return None;
    }
    Some((YearMonth::new(year, month)?, day))
}

fn parse_dated_csv(text: &str, column: &str, require_positive: bool) -> Result<RawTable, IngestError> {
    let mut obs: Vec<(YearMonth, u32, usize, f64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let cells = split_cells(line);
        let Some((ym, day)) = parse_date(cells[0]) else {
            if obs.is_empty() && idx == 0 {
                continue; // header
            }
            return Err(IngestError::BadDate {
                line: line_no,
                value: cells[0].to_string(),
            });
        };
        if cells.len() < 2 {
            return Err(IngestError::RowWidth {
                line: line_no,
                expected: 1,
                found: 0,
            });
        }
        let value = parse_cell(cells[1], line_no, 2)?;
        if require_positive && value <= 0.0 {
            return Err(IngestError::NonPositivePrice { line: line_no, value });
        }
        obs.push((ym, day, idx, value));
    }
    if obs.is_empty() {
        return Err(IngestError::NoMonthlyRows);
    }
    // Last observation of each month: latest day, ties broken by file order.
    obs.sort_by_key(|&(ym, day, idx, _)| (ym, day, idx));
    let mut rows: Vec<Row> = Vec::new();
    for (ym, _, _, value) in obs {
        match rows.last_mut() {
            Some(last) if last.date == ym => last.values[0] = value,
            _ => rows.push(Row {
                date: ym,
                values: vec![value],
            }),
        }
    }
    RawTable::new(vec![column.to_string()], rows)
}

/// Parses a `date,price` CSV into month-end prices.
pub fn parse_price_csv(text: &str) -> Result<RawTable, IngestError> {
    parse_dated_csv(text, "price", true)
}

/// Parses a `date,yield` CSV (annual percent) into month-end yields.
pub fn parse_yield_csv(text: &str) -> Result<RawTable, IngestError> {
    parse_dated_csv(text, "yield", false)
}

/// Restricts every table to the months present in all of them and inside
/// the inclusive `window`.
pub fn align_monthly(tables: &[RawTable], window: (YearMonth, YearMonth)) -> Result<Vec<RawTable>, IngestError> {
    let (start, end) = window;
    let mut common: Option<BTreeSet<YearMonth>> = None;
    for table in tables {
        let keys: BTreeSet<_> = table
            .rows
            .iter()
            .map(|r| r.date)
            .filter(|d| *d >= start && *d <= end)
            .collect();
        common = Some(match common {
            None => keys,
            Some(c) => c.intersection(&keys).copied().collect(),
        });
    }
    let common = common.unwrap_or_default();
    if common.is_empty() {
        return Err(IngestError::EmptyIntersection);
    }
    Ok(tables
        .iter()
        .map(|t| RawTable {
            columns: t.columns.clone(),
            rows: t.rows.iter().filter(|r| common.contains(&r.date)).cloned().collect(),
        })
        .collect())
}

/// A panel column source: `label` in the panel, `source` in the factor file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorColumn {
    pub label: String,
    pub source: String,
}

impl FromStr for FactorColumn {
    type Err = IngestError;

    /// `LABEL=source` or a bare column name used for both.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (label, source) = match s.split_once('=') {
            Some((l, r)) => (l.trim(), r.trim()),
            None => (s.trim(), s.trim()),
        };
        if label.is_empty() || source.is_empty() {
            return Err(IngestError::Config(format!("bad factor entry {s:?}")));
        }
        Ok(Self {
            label: label.to_string(),
            source: source.to_string(),
        })
    }
}

impl fmt::Display for FactorColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.label == self.source {
            write!(f, "{}", self.label)
        } else {
            write!(f, "{}={}", self.label, self.source)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetConfig {
    pub start: YearMonth,
    pub end: YearMonth,
    pub factors: Vec<FactorColumn>,
    /// Divisor turning factor-file percent values into decimals.
    pub factor_scale: f64,
    /// Divisor turning an annual-percent yield into a monthly decimal rate.
    pub riskfree_divisor: f64,
    pub asset: String,
    /// Factors that enter the regressions. Defaults to the first three
    /// ingested factors; the rest are carried for correlation tables only.
    pub regressors: Vec<String>,
    pub prices_path: Option<String>,
    pub riskfree_path: Option<String>,
    pub factors_path: Option<String>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            start: YearMonth(198603),
            end: YearMonth(202002),
            factors: ["MRP=Mkt-RF", "SMB", "HML"]
                .iter()
                .map(|s| s.parse().expect("static factor list"))
                .collect(),
            factor_scale: 100.0,
            riskfree_divisor: 1200.0,
            asset: "MSFT".to_string(),
            regressors: vec!["MRP".into(), "SMB".into(), "HML".into()],
            prices_path: None,
            riskfree_path: None,
            factors_path: None,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: String| Err(IngestError::Config(m));
        if self.start > self.end {
            return bad(format!("start {} after end {}", self.start, self.end));
        }
        if !(self.factor_scale > 0.0) || !(self.riskfree_divisor > 0.0) {
            return bad("divisors must be positive".into());
        }
        if self.factors.is_empty() {
            return bad("factor list is empty".into());
        }
        let mut labels = BTreeSet::new();
        for f in &self.factors {
            if !labels.insert(f.label.as_str()) {
                return bad(format!("duplicate factor {}", f.label));
            }
        }
        if self.regressors.is_empty() {
            return bad("regressor list is empty".into());
        }
        let mut seen = BTreeSet::new();
        for r in &self.regressors {
            if !labels.contains(r.as_str()) {
                return bad(format!("regressor {r} is not an ingested factor"));
            }
            if !seen.insert(r) {
                return bad(format!("duplicate regressor {r}"));
            }
        }
        Ok(())
    }

    /// Parses the flat `key = value` config format. Unknown keys are errors;
    /// `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut cfg = Self::default();
        let mut regressors_set = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(IngestError::Config(format!("line {}: expected key = value", idx + 1)));
            };
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| IngestError::Config(format!("line {}: {key} is not a number", idx + 1)))
            };
            let month = |v: &str| {
                v.parse::<YearMonth>()
                    .map_err(|e| IngestError::Config(format!("line {}: {e}", idx + 1)))
            };
            let list = |v: &str| -> Vec<String> {
                v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
            };
            match key {
                "start" => cfg.start = month(value)?,
                "end" => cfg.end = month(value)?,
                "factors" => {
                    cfg.factors = list(value).iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
                }
                "regressors" => {
                    cfg.regressors = list(value);
                    regressors_set = true;
                }
                "factor_scale" => cfg.factor_scale = num(value)?,
                "riskfree_divisor" => cfg.riskfree_divisor = num(value)?,
                "asset" => cfg.asset = value.to_string(),
                "prices" => cfg.prices_path = Some(value.to_string()),
                "riskfree" => cfg.riskfree_path = Some(value.to_string()),
                "factors_file" => cfg.factors_path = Some(value.to_string()),
                other => return Err(IngestError::Config(format!("line {}: unknown key {other:?}", idx + 1))),
            }
        }
        if !regressors_set {
            cfg.regressors = cfg.factors.iter().take(3).map(|f| f.label.clone()).collect();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Inverse of [`DatasetConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("start = {}\nend = {}\n", self.start, self.end));
        let factors: Vec<String> = self.factors.iter().map(|f| f.to_string()).collect();
        out.push_str(&format!("factors = {}\n", factors.join(", ")));
        out.push_str(&format!("regressors = {}\n", self.regressors.join(", ")));
        out.push_str(&format!("factor_scale = {}\n", self.factor_scale));
        out.push_str(&format!("riskfree_divisor = {}\n", self.riskfree_divisor));
        out.push_str(&format!("asset = {}\n", self.asset));
        for (key, value) in [
            ("prices", &self.prices_path),
            ("riskfree", &self.riskfree_path),
            ("factors_file", &self.factors_path),
        ] {
            if let Some(v) = value {
                out.push_str(&format!("{key} = {v}\n"));
            }
        }
        out
    }
}

/// A labelled, date-aligned column of monthly decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSeries {
    pub label: String,
    pub values: Vec<f64>,
}

impl NamedSeries {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            values,
        }
    }
}

/// Date-aligned dependent series plus factor series.
///
/// Used both for the raw panel (EXR on factors) and for the innovation panel
/// (EXRN on factor innovations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorPanel {
    pub dates: Vec<YearMonth>,
    pub dependent: NamedSeries,
    pub factors: Vec<NamedSeries>,
}

impl FactorPanel {
    pub fn new(dates: Vec<YearMonth>, dependent: NamedSeries, factors: Vec<NamedSeries>) -> Result<Self, IngestError> {
        let n = dates.len();
        if n < MIN_PANEL_LEN {
            return Err(IngestError::TooShort {
                found: n,
                required: MIN_PANEL_LEN,
            });
        }
        check_keys(dates.iter().copied())?;
        let mut labels = BTreeSet::new();
        for s in std::iter::once(&dependent).chain(&factors) {
            if s.values.len() != n {
                return Err(IngestError::LengthMismatch(format!(
                    "series {} has {} values for {} dates",
                    s.label,
                    s.values.len(),
                    n
                )));
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                return Err(IngestError::NonFinite(s.label.clone()));
            }
            if !labels.insert(s.label.as_str()) {
                return Err(IngestError::Config(format!("duplicate series label {}", s.label)));
            }
        }
        Ok(Self {
            dates,
            dependent,
            factors,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Looks up the dependent series or a factor by label.
    pub fn series(&self, label: &str) -> Option<&[f64]> {
        std::iter::once(&self.dependent)
            .chain(&self.factors)
            .find(|s| s.label == label)
            .map(|s| s.values.as_slice())
    }

    /// Dependent first, then factors in panel order.
    pub fn all_series(&self) -> impl Iterator<Item = &NamedSeries> {
        std::iter::once(&self.dependent).chain(&self.factors)
    }

    pub fn labels(&self) -> Vec<String> {
        self.all_series().map(|s| s.label.clone()).collect()
    }
}

/// Builds the analysis panel: `EXR_t = ln(S_t / S_{t-1}) - yield_t / divisor`.
///
/// Prices may carry one extra leading month, which the return transform
/// consumes. Factor and risk-free rows dated before the first return are
/// dropped; after that all three grids must agree exactly.
pub fn build_panel(
    prices: &RawTable,
    riskfree: &RawTable,
    factors: &RawTable,
    config: &DatasetConfig,
) -> Result<FactorPanel, IngestError> {
    config.validate()?;
    if prices.len() < 2 {
        return Err(IngestError::LengthMismatch("fewer than two prices".into()));
    }
    let price = prices.column("price").unwrap_or_else(|| prices.rows.iter().map(|r| r.values[0]).collect());
    if let Some(bad) = price.iter().find(|p| !(**p > 0.0)) {
        return Err(IngestError::NonPositivePrice { line: 0, value: *bad });
    }
    let return_dates: Vec<YearMonth> = prices.rows[1..].iter().map(|r| r.date).collect();
    let first = return_dates[0];

    let trimmed = |table: &RawTable, what: &str| -> Result<Vec<Row>, IngestError> {
        let rows: Vec<Row> = table.rows.iter().filter(|r| r.date >= first).cloned().collect();
        let dates: Vec<YearMonth> = rows.iter().map(|r| r.date).collect();
        if dates != return_dates {
            return Err(IngestError::LengthMismatch(format!(
                "{what} has {} months from {first}, returns have {}",
                dates.len(),
                return_dates.len()
            )));
        }
        Ok(rows)
    };
    let rf_rows = trimmed(riskfree, "risk-free table")?;
    let factor_rows = trimmed(factors, "factor table")?;

    let rf_idx = riskfree.column_index("yield").unwrap_or(0);
    let exr: Vec<f64> = price
        .windows(2)
        .zip(&rf_rows)
        .map(|(w, rf)| (w[1] / w[0]).ln() - rf.values[rf_idx] / config.riskfree_divisor)
        .collect();

    let mut series = Vec::with_capacity(config.factors.len());
    for fc in &config.factors {
        let idx = factors
            .column_index(&fc.source)
            .ok_or_else(|| IngestError::MissingColumn(fc.source.clone()))?;
        series.push(NamedSeries::new(
            fc.label.clone(),
            factor_rows.iter().map(|r| r.values[idx]).collect(),
        ));
    }
    FactorPanel::new(return_dates, NamedSeries::new("EXR", exr), series)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ym(k: u32) -> YearMonth {
        YearMonth::from_yyyymm(k).unwrap()
    }

    fn table(col: &str, rows: &[(u32, f64)]) -> RawTable {
        RawTable::new(
            vec![col.into()],
            rows.iter()
                .map(|&(d, v)| Row {
                    date: ym(d),
                    values: vec![v],
                })
                .collect(),
        )
        .unwrap()
    }

    fn months(start: u32, n: usize) -> Vec<YearMonth> {
        let mut d = ym(start);
        (0..n)
            .map(|_| {
                let cur = d;
                d = d.next();
                cur
            })
            .collect()
    }

    #[test]
    fn factor_row_scaled() {
        let t = parse_factor_csv(",Mkt-RF,SMB,HML,RF\n192607, 2.96, -2.56, -2.43, 0.22\n", 100.0).unwrap();
        assert_eq!(t.columns, vec!["Mkt-RF", "SMB", "HML", "RF"]);
        let expected = [0.0296, -0.0256, -0.0243, 0.0022];
        for (got, want) in t.rows[0].values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_stream_has_no_rows() {
        assert_eq!(parse_factor_csv("", 100.0), Err(IngestError::NoMonthlyRows));
        assert_eq!(parse_factor_csv("just a preamble\n\n", 100.0), Err(IngestError::NoMonthlyRows));
    }

    #[test]
    fn annual_block_excluded() {
        let mut text = String::from("This file was created by a library tool\nusing the 202002 database.\n\n,Mkt-RF,SMB\n");
        for m in 1..=12 {
            text.push_str(&format!("2019{m:02},1.0,2.0\n"));
        }
        text.push_str("\n Annual Factors: January-December\n,Mkt-RF,SMB\n2019,30.0,1.0\n");
        let t = parse_factor_csv(&text, 100.0).unwrap();
        assert_eq!(t.len(), 12);
        assert_eq!(t.rows.last().unwrap().date, ym(201912));

        // Annual key right after the monthly block, no blank line.
        let text = ",A\n201901,1\n201902,2\n2019,3\n";
        assert_eq!(parse_factor_csv(text, 1.0).unwrap().len(), 2);
    }

    #[test]
    fn malformed_cell_reports_position() {
        let err = parse_factor_csv(",A,B\n201901,1.0,x\n", 100.0).unwrap_err();
        assert_eq!(
            err,
            IngestError::MalformedCell {
                line: 2,
                column: 3,
                value: "x".into()
            }
        );
    }

    #[test]
    fn duplicate_factor_key() {
        let err = parse_factor_csv(",A\n201901,1\n201901,2\n", 1.0).unwrap_err();
        assert_eq!(err, IngestError::DuplicateDate(ym(201901)));
    }

    #[test]
    fn headerless_factor_file() {
        let t = parse_factor_csv("201901,1,2\n201902,3,4\n", 1.0).unwrap();
        assert_eq!(t.columns, vec!["V1", "V2"]);
    }

    #[test]
    fn price_last_of_month() {
        let t = parse_price_csv("date,price\n2020-01-31,170.23\n2020-01-15,163.18\n").unwrap();
        assert_eq!(t.rows, vec![Row { date: ym(202001), values: vec![170.23] }]);
    }

    #[test]
    fn price_non_positive() {
        let err = parse_price_csv("date,price\n2020-01-31,0\n").unwrap_err();
        assert!(err.to_string().contains("non-positive price"), "{err}");
    }

    #[test]
    fn price_bad_date() {
        let err = parse_price_csv("date,price\n2020-01-31,1\n31/01/2020,2\n").unwrap_err();
        assert!(matches!(err, IngestError::BadDate { line: 3, .. }));
    }

    #[test]
    fn daily_prices_collapse_to_months() {
        let mut text = String::from("date,price\n");
        for day in 1..=12 {
            text.push_str(&format!("2020-01-{day:02},{}\n", 100 + day));
        }
        for day in 1..=12 {
            text.push_str(&format!("2020-02-{day:02},{}\n", 200 + day));
        }
        let t = parse_price_csv(&text).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.rows[0].values[0], 112.0);
        assert_eq!(t.rows[1].values[0], 212.0);
    }

    #[test]
    fn yyyymm_prices_accepted() {
        let t = parse_price_csv("date,price\n202001,10\n202002,11\n").unwrap();
        assert_eq!(t.dates(), vec![ym(202001), ym(202002)]);
    }

    #[test]
    fn align_clips_to_window() {
        let a = table("a", &months(198601, 412).iter().map(|d| (d.key(), 1.0)).collect::<Vec<_>>());
        let b = table("b", &months(199001, 432).iter().map(|d| (d.key(), 2.0)).collect::<Vec<_>>());
        let out = align_monthly(&[a, b], (ym(199001), ym(202002))).unwrap();
        for t in &out {
            assert_eq!(t.rows.first().unwrap().date, ym(199001));
            assert_eq!(t.rows.last().unwrap().date, ym(202002));
            assert_eq!(t.len(), 362);
        }
    }

    #[test]
    fn align_disjoint() {
        let a = table("a", &[(200001, 1.0)]);
        let b = table("b", &[(200002, 1.0)]);
        assert_eq!(
            align_monthly(&[a, b], (ym(199001), ym(202002))),
            Err(IngestError::EmptyIntersection)
        );
    }

    #[test]
    fn align_drops_missing_month_everywhere() {
        let all: Vec<(u32, f64)> = months(201901, 12).iter().map(|d| (d.key(), 1.0)).collect();
        let gap: Vec<(u32, f64)> = all.iter().copied().filter(|(d, _)| *d != 201905).collect();
        let tables = [table("a", &all), table("b", &gap), table("c", &all)];
        let out = align_monthly(&tables, (ym(190001), ym(299912))).unwrap();

        let oracle: BTreeSet<YearMonth> = tables
            .iter()
            .map(|t| t.dates().into_iter().collect::<BTreeSet<_>>())
            .reduce(|a, b| a.intersection(&b).copied().collect())
            .unwrap();
        for t in &out {
            assert_eq!(t.dates(), oracle.iter().copied().collect::<Vec<_>>());
            assert_eq!(t.len(), 11);
        }
    }

    fn panel_inputs(prices: &[f64], yield_pct: f64) -> (RawTable, RawTable, RawTable) {
        let dates = months(200001, prices.len());
        let p = table("price", &dates.iter().zip(prices).map(|(d, p)| (d.key(), *p)).collect::<Vec<_>>());
        let rf = table("yield", &dates.iter().map(|d| (d.key(), yield_pct)).collect::<Vec<_>>());
        let f = RawTable::new(
            vec!["Mkt-RF".into(), "SMB".into(), "HML".into()],
            dates
                .iter()
                .enumerate()
                .map(|(i, d)| Row {
                    date: *d,
                    values: vec![0.01 * i as f64, -0.001 * i as f64, 0.002],
                })
                .collect(),
        )
        .unwrap();
        (p, rf, f)
    }

    #[test]
    fn constant_price_zero_yield() {
        let (p, rf, f) = panel_inputs(&[50.0; 40], 0.0);
        let panel = build_panel(&p, &rf, &f, &DatasetConfig::default()).unwrap();
        assert_eq!(panel.len(), 39);
        assert!(panel.dependent.values.iter().all(|v| *v == 0.0));
        assert_eq!(panel.series("MRP").unwrap()[0], 0.01);
    }

    #[test]
    fn doubling_price_with_yield() {
        let mut prices = vec![100.0; 40];
        prices[1] = 200.0;
        let (p, rf, f) = panel_inputs(&prices, 12.0);
        let panel = build_panel(&p, &rf, &f, &DatasetConfig::default()).unwrap();
        let v = panel.dependent.values[0];
        assert!((v - (2f64.ln() - 0.01)).abs() < 1e-15);
        assert!((v - 0.68315).abs() < 1e-5);
    }

    #[test]
    fn extra_leading_price_month() {
        let (p, rf, f) = panel_inputs(&[10.0; 41], 1.0);
        let rf = RawTable {
            columns: rf.columns.clone(),
            rows: rf.rows[1..].to_vec(),
        };
        let f = RawTable {
            columns: f.columns.clone(),
            rows: f.rows[1..].to_vec(),
        };
        let panel = build_panel(&p, &rf, &f, &DatasetConfig::default()).unwrap();
        assert_eq!(panel.len(), 40);
        assert_eq!(panel.dates[0], ym(200002));
    }

    #[test]
    fn build_panel_errors() {
        let (p, rf, f) = panel_inputs(&[10.0; 40], 1.0);
        let short_rf = RawTable {
            columns: rf.columns.clone(),
            rows: rf.rows[..30].to_vec(),
        };
        assert!(matches!(
            build_panel(&p, &short_rf, &f, &DatasetConfig::default()),
            Err(IngestError::LengthMismatch(_))
        ));
        let cfg = DatasetConfig {
            factors: vec!["RMW".parse().unwrap()],
            regressors: vec!["RMW".into()],
            ..DatasetConfig::default()
        };
        assert_eq!(build_panel(&p, &rf, &f, &cfg), Err(IngestError::MissingColumn("RMW".into())));
    }

    #[test]
    fn config_round_trip_and_validation() {
        let cfg = DatasetConfig {
            prices_path: Some("msft.csv".into()),
            ..DatasetConfig::default()
        };
        assert_eq!(DatasetConfig::parse(&cfg.to_text()).unwrap(), cfg);

        let parsed = DatasetConfig::parse("start = 199001 # comment\nfactors = MRP=Mkt-RF, SMB, HML, RMW\n").unwrap();
        assert_eq!(parsed.regressors, vec!["MRP", "SMB", "HML"]);
        assert_eq!(parsed.factors[3].source, "RMW");

        assert!(DatasetConfig::parse("start = 202001\nend = 199001\n").is_err());
        assert!(DatasetConfig::parse("factors = SMB, SMB\n").is_err());
        assert!(DatasetConfig::parse("factor_scale = 0\n").is_err());
        assert!(DatasetConfig::parse("colour = blue\n").is_err());
    }

    #[test]
    fn year_month_arithmetic() {
        assert_eq!(ym(202001).prev(), ym(201912));
        assert_eq!(ym(201912).next(), ym(202001));
        assert!(YearMonth::from_yyyymm(202013).is_none());
        assert_eq!(serde_json::to_string(&ym(198603)).unwrap(), "198603");
        assert!(serde_json::from_str::<YearMonth>("198613").is_err());
    }
}
