//! Daily candles and trading-activity aggregates.
//!
//! Every monetary field is a USD amount carried as `f64`. Leverage fields are
//! dimensionless multiples. Dates are calendar days; a series is contiguous
//! (one record per day) once it has passed ingestion.

pub mod remote;

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for the long/short open-interest identity on
/// order-book exchanges.
pub const CEX_OI_TOLERANCE: f64 = 1e-6;

pub const CANDLE_HEADER: [&str; 5] = ["date", "open", "high", "low", "close"];
pub const ACTIVITY_HEADER: [&str; 6] = ["date", "volume", "oi_long", "oi_short", "liq_long", "liq_short"];
pub const LEVERAGE_COLUMNS: [&str; 2] = ["lev_long", "lev_short"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("line {line}: malformed row: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: inconsistent OHLC on {date}: {reason}")]
    OhlcInconsistent { line: usize, date: NaiveDate, reason: String },
    #[error("line {line}: duplicate date {date}")]
    DuplicateDate { line: usize, date: NaiveDate },
    #[error("line {line}: negative or non-finite value in column `{column}`: {value}")]
    NegativeValue { line: usize, column: String, value: f64 },
    #[error("date gap: {missing} missing between {before} and {after}")]
    DateGap { before: NaiveDate, after: NaiveDate, missing: NaiveDate },
    #[error("line {line}: order-book open interest mismatch on {date}: long {oi_long} vs short {oi_short}")]
    OiMismatch { line: usize, date: NaiveDate, oi_long: f64, oi_short: f64 },
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("unknown source tag `{0}`")]
    UnknownSource(String),
}

/// One day of OHLC prices for the underlying, in USD per unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candle {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl Candle {
    pub fn new(date: NaiveDate, open: f64, high: f64, low: f64, close: f64) -> Result<Self, String> {
        let candle = Candle { date, open, high, low, close };
        candle.check()?;
        Ok(candle)
    }

    fn check(&self) -> Result<(), String> {
        for (name, v) in [("open", self.open), ("high", self.high), ("low", self.low), ("close", self.close)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if self.low > self.high {
            return Err(format!("low {} > high {}", self.low, self.high));
        }
        if self.low > self.open.min(self.close) {
            return Err(format!("low {} above min(open, close)", self.low));
        }
        if self.high < self.open.max(self.close) {
            return Err(format!("high {} below max(open, close)", self.high));
        }
        Ok(())
    }

    /// Same candle with every price multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Candle {
        Candle {
            date: self.date,
            open: self.open * factor,
            high: self.high * factor,
            low: self.low * factor,
            close: self.close * factor,
        }
    }

    /// Candle with open and close exchanged.
    pub fn swapped_open_close(&self) -> Candle {
        Candle { open: self.close, close: self.open, ..*self }
    }
}

/// Daily log return `ln(close) - ln(open)`.
pub fn log_return(candle: &Candle) -> f64 {
    candle.close.ln() - candle.open.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceTag {
    LobCex,
    Vamm,
    Oracle,
    Simulated,
}

impl SourceTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SourceTag::LobCex => "lob-cex",
            SourceTag::Vamm => "vamm",
            SourceTag::Oracle => "oracle",
            SourceTag::Simulated => "simulated",
        }
    }
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceTag {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lob-cex" | "lob" | "cex" => Ok(SourceTag::LobCex),
            "vamm" => Ok(SourceTag::Vamm),
            "oracle" => Ok(SourceTag::Oracle),
            "simulated" => Ok(SourceTag::Simulated),
            other => Err(DataError::UnknownSource(other.to_string())),
        }
    }
}

/// Per-day trading aggregates. USD fields are non-negative; leverage fields
/// are absent for exchanges where per-position leverage is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityRecord {
    pub date: NaiveDate,
    pub volume: f64,
    pub oi_long: f64,
    pub oi_short: f64,
    pub liq_long: f64,
    pub liq_short: f64,
    pub lev_long: Option<f64>,
    pub lev_short: Option<f64>,
    /// Set when the row was forward-filled during ingestion.
    #[serde(default)]
    pub imputed: bool,
}

impl ActivityRecord {
    pub fn empty(date: NaiveDate) -> Self {
        ActivityRecord {
            date,
            volume: 0.0,
            oi_long: 0.0,
            oi_short: 0.0,
            liq_long: 0.0,
            liq_short: 0.0,
            lev_long: None,
            lev_short: None,
            imputed: false,
        }
    }

    fn usd_fields(&self) -> [(&'static str, f64); 5] {
        [
            ("volume", self.volume),
            ("oi_long", self.oi_long),
            ("oi_short", self.oi_short),
            ("liq_long", self.liq_long),
            ("liq_short", self.liq_short),
        ]
    }
}

/// Which activity column a series refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityField {
    Volume,
    OiLong,
    OiShort,
    LiqLong,
    LiqShort,
    LevLong,
    LevShort,
}

impl ActivityField {
    pub const ALL: [ActivityField; 7] = [
        ActivityField::Volume,
        ActivityField::OiLong,
        ActivityField::OiShort,
        ActivityField::LiqLong,
        ActivityField::LiqShort,
        ActivityField::LevLong,
        ActivityField::LevShort,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ActivityField::Volume => "volume",
            ActivityField::OiLong => "oi_long",
            ActivityField::OiShort => "oi_short",
            ActivityField::LiqLong => "liq_long",
            ActivityField::LiqShort => "liq_short",
            ActivityField::LevLong => "lev_long",
            ActivityField::LevShort => "lev_short",
        }
    }

    pub fn get(&self, record: &ActivityRecord) -> Option<f64> {
        match self {
            ActivityField::Volume => Some(record.volume),
            ActivityField::OiLong => Some(record.oi_long),
            ActivityField::OiShort => Some(record.oi_short),
            ActivityField::LiqLong => Some(record.liq_long),
            ActivityField::LiqShort => Some(record.liq_short),
            ActivityField::LevLong => record.lev_long,
            ActivityField::LevShort => record.lev_short,
        }
    }
}

impl FromStr for ActivityField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActivityField::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown activity field `{s}`"))
    }
}

/// Contiguous, date-ordered activity records from one exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivitySeries {
    pub source: SourceTag,
    pub records: Vec<ActivityRecord>,
}

impl ActivitySeries {
    /// Validates ordering, contiguity, non-negativity and the order-book OI
    /// identity.
    pub fn new(source: SourceTag, records: Vec<ActivityRecord>) -> Result<Self, DataError> {
        for (i, r) in records.iter().enumerate() {
            validate_record(r, i + 2, source)?;
        }
        for pair in records.windows(2) {
            let (a, b) = (pair[0].date, pair[1].date);
            if b <= a {
                return Err(DataError::DuplicateDate { line: 0, date: b });
            }
            if let Some(next) = a.succ_opt() {
                if next != b {
                    return Err(DataError::DateGap { before: a, after: b, missing: next });
                }
            }
        }
        Ok(ActivitySeries { source, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.records.iter().map(|r| r.date).collect()
    }

    pub fn has_leverage(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.lev_long.is_some() && r.lev_short.is_some())
    }

    /// Values of one column, or `None` when any record lacks it.
    pub fn column(&self, field: ActivityField) -> Option<Vec<f64>> {
        self.records.iter().map(|r| field.get(r)).collect()
    }

    pub fn imputed_dates(&self) -> Vec<NaiveDate> {
        self.records.iter().filter(|r| r.imputed).map(|r| r.date).collect()
    }
}

fn validate_record(r: &ActivityRecord, line: usize, source: SourceTag) -> Result<(), DataError> {
    for (column, value) in r.usd_fields() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(DataError::NegativeValue { line, column: column.to_string(), value });
        }
    }
    for (column, value) in [("lev_long", r.lev_long), ("lev_short", r.lev_short)] {
        if let Some(value) = value {
            if !(value.is_finite() && value >= 0.0) {
                return Err(DataError::NegativeValue { line, column: column.to_string(), value });
            }
        }
    }
    if source == SourceTag::LobCex {
        let scale = r.oi_long.abs().max(r.oi_short.abs());
        if (r.oi_long - r.oi_short).abs() > CEX_OI_TOLERANCE * scale {
            return Err(DataError::OiMismatch { line, date: r.date, oi_long: r.oi_long, oi_short: r.oi_short });
        }
    }
    Ok(())
}

/// Behaviour for calendar gaps found while ingesting activity data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GapPolicy {
    #[default]
    Reject,
    /// Repeat the previous day's record and mark it as imputed.
    ForwardFill,
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes())
}

fn header_fields(rdr: &mut csv::Reader<&[u8]>) -> Result<Vec<String>, DataError> {
    let headers = rdr
        .headers()
        .map_err(|e| DataError::Malformed { line: 1, reason: e.to_string() })?;
    Ok(headers.iter().map(str::to_string).collect())
}

fn parse_date(field: &str, line: usize) -> Result<NaiveDate, DataError> {
    NaiveDate::parse_from_str(field, "%Y-%m-%d")
        .map_err(|e| DataError::Malformed { line, reason: format!("bad date `{field}`: {e}") })
}

fn parse_number(field: &str, column: &str, line: usize) -> Result<f64, DataError> {
    field
        .parse::<f64>()
        .map_err(|_| DataError::Malformed { line, reason: format!("bad number `{field}` in column `{column}`") })
}

/// Parses `candles.csv` (`date,open,high,low,close`) into date-sorted candles.
pub fn parse_candles(text: &str) -> Result<Vec<Candle>, DataError> {
    let mut rdr = reader(text);
    let header = header_fields(&mut rdr)?;
    if header != CANDLE_HEADER {
        return Err(DataError::Header { expected: CANDLE_HEADER.join(","), found: header.join(",") });
    }
    let mut candles: Vec<(usize, Candle)> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| DataError::Malformed { line, reason: e.to_string() })?;
        if row.len() != CANDLE_HEADER.len() {
            return Err(DataError::Malformed {
                line,
                reason: format!("expected {} fields, found {}", CANDLE_HEADER.len(), row.len()),
            });
        }
        let date = parse_date(&row[0], line)?;
        let mut prices = [0.0; 4];
        for (k, slot) in prices.iter_mut().enumerate() {
            *slot = parse_number(&row[k + 1], CANDLE_HEADER[k + 1], line)?;
        }
        let candle = Candle::new(date, prices[0], prices[1], prices[2], prices[3])
            .map_err(|reason| DataError::OhlcInconsistent { line, date, reason })?;
        candles.push((line, candle));
    }
    candles.sort_by_key(|(_, c)| c.date);
    for pair in candles.windows(2) {
        if pair[0].1.date == pair[1].1.date {
            let line = pair[0].0.max(pair[1].0);
            return Err(DataError::DuplicateDate { line, date: pair[1].1.date });
        }
    }
    Ok(candles.into_iter().map(|(_, c)| c).collect())
}

/// Parses `activity.csv`. Leverage columns are optional but must appear
/// together.
pub fn parse_activity(text: &str, source: SourceTag, gaps: GapPolicy) -> Result<ActivitySeries, DataError> {
    let mut rdr = reader(text);
    let header = header_fields(&mut rdr)?;
    let with_leverage = header.len() == ACTIVITY_HEADER.len() + 2;
    let mut expected: Vec<&str> = ACTIVITY_HEADER.to_vec();
    if with_leverage {
        expected.extend(LEVERAGE_COLUMNS);
    }
    if header != expected {
        return Err(DataError::Header {
            expected: format!("{} (optionally followed by {})", ACTIVITY_HEADER.join(","), LEVERAGE_COLUMNS.join(",")),
            found: header.join(","),
        });
    }

    let mut rows: Vec<(usize, ActivityRecord)> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| DataError::Malformed { line, reason: e.to_string() })?;
        if row.len() != expected.len() {
            return Err(DataError::Malformed {
                line,
                reason: format!("expected {} fields, found {}", expected.len(), row.len()),
            });
        }
        let date = parse_date(&row[0], line)?;
        let mut v = [0.0; 7];
        for k in 1..expected.len() {
            v[k - 1] = parse_number(&row[k], expected[k], line)?;
        }
        let record = ActivityRecord {
            date,
            volume: v[0],
            oi_long: v[1],
            oi_short: v[2],
            liq_long: v[3],
            liq_short: v[4],
            lev_long: with_leverage.then_some(v[5]),
            lev_short: with_leverage.then_some(v[6]),
            imputed: false,
        };
        validate_record(&record, line, source)?;
        rows.push((line, record));
    }
    rows.sort_by_key(|(_, r)| r.date);

    let mut records: Vec<ActivityRecord> = Vec::with_capacity(rows.len());
    for (line, record) in rows {
        if let Some(prev) = records.last().copied() {
            if prev.date == record.date {
                return Err(DataError::DuplicateDate { line, date: record.date });
            }
            let mut next = prev.date.succ_opt().expect("date overflow");
            while next < record.date {
                match gaps {
                    GapPolicy::Reject => {
                        return Err(DataError::DateGap { before: prev.date, after: record.date, missing: next })
                    }
                    GapPolicy::ForwardFill => {
                        let filler = ActivityRecord { date: next, imputed: true, ..*records.last().unwrap() };
                        records.push(filler);
                    }
                }
                next = next.succ_opt().expect("date overflow");
            }
        }
        records.push(record);
    }
    Ok(ActivitySeries { source, records })
}

pub fn write_candles(candles: &[Candle]) -> String {
    let mut out = CANDLE_HEADER.join(",");
    out.push('\n');
    for c in candles {
        out.push_str(&format!("{},{},{},{},{}\n", c.date, c.open, c.high, c.low, c.close));
    }
    out
}

/// Serializes in the `activity.csv` schema; leverage columns are written only
/// when every record carries them.
pub fn write_activity(series: &ActivitySeries) -> String {
    let with_leverage = series.has_leverage();
    let mut out = ACTIVITY_HEADER.join(",");
    if with_leverage {
        out.push(',');
        out.push_str(&LEVERAGE_COLUMNS.join(","));
    }
    out.push('\n');
    for r in &series.records {
        out.push_str(&format!("{},{},{},{},{},{}", r.date, r.volume, r.oi_long, r.oi_short, r.liq_long, r.liq_short));
        if with_leverage {
            out.push_str(&format!(",{},{}", r.lev_long.unwrap_or(0.0), r.lev_short.unwrap_or(0.0)));
        }
        out.push('\n');
    }
    out
}
