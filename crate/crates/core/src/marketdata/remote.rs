//! Generic JSON feed client with an on-disk response cache.
//!
//! A feed is described by a small TOML file:
//!
//! ```toml
//! name = "btc-daily"
//! kind = "candles"                 # or "activity"
//! url = "https://example.com/ohlc?from={start}&to={end}"
//! auth_env = "FEED_API_KEY"        # optional; value sent in `auth_header`
//! records = "/data"                # JSON pointer to the record array
//! date_format = "iso"              # iso | unix | unix-ms
//! source = "lob-cex"               # activity feeds only
//!
//! [fields]
//! date = "t"
//! open = "o"
//! high = "h"
//! low = "l"
//! close = "c"
//! ```
//!
//! URL templates may use `{start}`/`{end}` (ISO dates) and
//! `{start_ts}`/`{end_ts}` (unix seconds, end is exclusive midnight).
//! Raw responses are cached under `<cache>/<feed>/<key>.json`, where the key
//! hashes the feed name, URL template and range, so a repeated request never
//! touches the network.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate};
use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{ActivityRecord, ActivitySeries, Candle, DataError, SourceTag};

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("feed config: {0}")]
    Config(String),
    #[error("credentials variable `{0}` is not set")]
    MissingCredentials(String),
    #[error("schema mapping failed; unmatched fields: {}", .0.join(", "))]
    Schema(Vec<String>),
    #[error("response is missing {} day(s): {}", .0.len(), join_dates(.0))]
    MissingDays(Vec<NaiveDate>),
    #[error("bad value: {0}")]
    Value(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("cache i/o: {0}")]
    Io(#[from] io::Error),
}

fn join_dates(dates: &[NaiveDate]) -> String {
    dates.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedKind {
    Candles,
    Activity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DateFormat {
    #[default]
    Iso,
    Unix,
    UnixMs,
}

#[derive(Debug, Clone, Deserialize)]
pub struct FeedConfig {
    pub name: String,
    pub kind: FeedKind,
    pub url: String,
    #[serde(default)]
    pub auth_env: Option<String>,
    #[serde(default = "default_auth_header")]
    pub auth_header: String,
    #[serde(default)]
    pub records: String,
    #[serde(default)]
    pub date_format: DateFormat,
    #[serde(default)]
    pub source: Option<SourceTag>,
    /// Canonical field name -> key in each response record.
    pub fields: BTreeMap<String, String>,
}

fn default_auth_header() -> String {
    "Authorization".to_string()
}

impl FeedConfig {
    pub fn from_toml(text: &str) -> Result<Self, FetchError> {
        let cfg: FeedConfig = toml::from_str(text).map_err(|e| FetchError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn required(&self) -> &'static [&'static str] {
        match self.kind {
            FeedKind::Candles => &["date", "open", "high", "low", "close"],
            FeedKind::Activity => &["date", "volume", "oi_long", "oi_short", "liq_long", "liq_short"],
        }
    }

    fn check(&self) -> Result<(), FetchError> {
        let missing: Vec<&str> = self.required().iter().copied().filter(|f| !self.fields.contains_key(*f)).collect();
        if !missing.is_empty() {
            return Err(FetchError::Config(format!("field mapping lacks: {}", missing.join(", "))));
        }
        if self.kind == FeedKind::Activity
            && self.fields.contains_key("lev_long") != self.fields.contains_key("lev_short")
        {
            return Err(FetchError::Config("lev_long and lev_short must be mapped together".into()));
        }
        Ok(())
    }

    fn render_url(&self, range: &DateRange) -> String {
        let start_ts = range.start.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp();
        let end_ts = range.end.succ_opt().unwrap().and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp();
        self.url
            .replace("{start}", &range.start.to_string())
            .replace("{end}", &range.end.to_string())
            .replace("{start_ts}", &start_ts.to_string())
            .replace("{end_ts}", &end_ts.to_string())
    }

    fn cache_key(&self, range: &DateRange) -> String {
        let mut h = Sha256::new();
        for part in [self.name.as_str(), self.url.as_str(), &range.start.to_string(), &range.end.to_string()] {
            h.update(part.as_bytes());
            h.update([0u8]);
        }
        hex::encode(h.finalize())
    }
}

/// Inclusive calendar range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, FetchError> {
        if end < start {
            return Err(FetchError::Config(format!("range end {end} precedes start {start}")));
        }
        Ok(DateRange { start, end })
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> {
        let end = self.end;
        self.start.iter_days().take_while(move |d| *d <= end)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RemoteSeries {
    Candles(Vec<Candle>),
    Activity(ActivitySeries),
}

pub trait Transport {
    fn get(&self, url: &str, headers: &[(String, String)]) -> Result<Vec<u8>, FetchError>;
}

/// Blocking HTTPS transport.
#[cfg(feature = "http")]
#[derive(Debug, Default, Clone, Copy)]
pub struct HttpTransport;

#[cfg(feature = "http")]
impl Transport for HttpTransport {
    fn get(&self, url: &str, headers: &[(String, String)]) -> Result<Vec<u8>, FetchError> {
        let mut req = ureq::get(url);
        for (k, v) in headers {
            req = req.header(k.as_str(), v.as_str());
        }
        let mut resp = req.call().map_err(|e| FetchError::Transport(e.to_string()))?;
        resp.body_mut().read_to_vec().map_err(|e| FetchError::Transport(e.to_string()))
    }
}

pub struct FeedClient<T> {
    transport: T,
    cache_dir: PathBuf,
}

impl<T: Transport> FeedClient<T> {
    pub fn new(transport: T, cache_dir: impl Into<PathBuf>) -> Self {
        FeedClient { transport, cache_dir: cache_dir.into() }
    }

    pub fn cache_path(&self, feed: &FeedConfig, range: &DateRange) -> PathBuf {
        self.cache_dir.join(sanitize(&feed.name)).join(format!("{}.json", feed.cache_key(range)))
    }

    /// Fetches `range` for `feed`, serving from the cache when possible.
    pub fn fetch_remote(&self, feed: &FeedConfig, range: &DateRange) -> Result<RemoteSeries, FetchError> {
        let path = self.cache_path(feed, range);
        let body = match fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                let mut headers = Vec::new();
                if let Some(var) = &feed.auth_env {
                    let value = std::env::var(var).map_err(|_| FetchError::MissingCredentials(var.clone()))?;
                    headers.push((feed.auth_header.clone(), value));
                }
                let bytes = self.transport.get(&feed.render_url(range), &headers)?;
                // Validate before caching so a bad response is never replayed.
                let parsed = decode(feed, range, &bytes)?;
                write_atomic(&path, &bytes)?;
                return Ok(parsed);
            }
            Err(e) => return Err(e.into()),
        };
        decode(feed, range, &body)
    }
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

fn decode(feed: &FeedConfig, range: &DateRange, body: &[u8]) -> Result<RemoteSeries, FetchError> {
    let root: Value = serde_json::from_slice(body).map_err(|e| FetchError::Value(format!("response is not JSON: {e}")))?;
    let records = root
        .pointer(&feed.records)
        .and_then(Value::as_array)
        .ok_or_else(|| FetchError::Schema(vec![format!("records pointer `{}`", feed.records)]))?;

    // Every mapped key must appear in at least one record.
    let unmatched: Vec<String> = feed
        .fields
        .iter()
        .filter(|(_, key)| !records.iter().any(|r| r.get(key.as_str()).is_some()))
        .map(|(name, key)| format!("{name} -> `{key}`"))
        .collect();
    if !unmatched.is_empty() {
        return Err(FetchError::Schema(unmatched));
    }

    let mut by_date: BTreeMap<NaiveDate, &Value> = BTreeMap::new();
    for r in records {
        let date = field_date(r, &feed.fields["date"], feed.date_format)?;
        if date >= range.start && date <= range.end {
            by_date.insert(date, r);
        }
    }
    let present: BTreeSet<NaiveDate> = by_date.keys().copied().collect();
    let missing: Vec<NaiveDate> = range.days().filter(|d| !present.contains(d)).collect();
    if !missing.is_empty() {
        return Err(FetchError::MissingDays(missing));
    }

    let num = |r: &Value, name: &str| field_number(r, &feed.fields[name]);
    match feed.kind {
        FeedKind::Candles => {
            let mut out = Vec::with_capacity(by_date.len());
            for (i, (date, r)) in by_date.iter().enumerate() {
                let candle = Candle::new(*date, num(r, "open")?, num(r, "high")?, num(r, "low")?, num(r, "close")?)
                    .map_err(|reason| DataError::OhlcInconsistent { line: i + 1, date: *date, reason })?;
                out.push(candle);
            }
            Ok(RemoteSeries::Candles(out))
        }
        FeedKind::Activity => {
            let with_lev = feed.fields.contains_key("lev_long");
            let mut out = Vec::with_capacity(by_date.len());
            for (date, r) in &by_date {
                out.push(ActivityRecord {
                    date: *date,
                    volume: num(r, "volume")?,
                    oi_long: num(r, "oi_long")?,
                    oi_short: num(r, "oi_short")?,
                    liq_long: num(r, "liq_long")?,
                    liq_short: num(r, "liq_short")?,
                    lev_long: if with_lev { Some(num(r, "lev_long")?) } else { None },
                    lev_short: if with_lev { Some(num(r, "lev_short")?) } else { None },
                    imputed: false,
                });
            }
            let source = feed.source.unwrap_or(SourceTag::LobCex);
            Ok(RemoteSeries::Activity(ActivitySeries::new(source, out)?))
        }
    }
}

fn field_number(record: &Value, key: &str) -> Result<f64, FetchError> {
    match record.get(key) {
        Some(Value::Number(n)) => n.as_f64().ok_or_else(|| FetchError::Value(format!("`{key}` out of range"))),
        Some(Value::String(s)) => s.trim().parse().map_err(|_| FetchError::Value(format!("`{key}` = `{s}` is not numeric"))),
        Some(other) => Err(FetchError::Value(format!("`{key}` has unexpected type: {other}"))),
        None => Err(FetchError::Schema(vec![format!("`{key}` absent in a record")])),
    }
}

fn field_date(record: &Value, key: &str, format: DateFormat) -> Result<NaiveDate, FetchError> {
    let bad = || FetchError::Value(format!("`{key}` is not a {format:?} date"));
    match format {
        DateFormat::Iso => {
            let s = record.get(key).and_then(Value::as_str).ok_or_else(bad)?;
            NaiveDate::parse_from_str(s.get(..10).unwrap_or(s), "%Y-%m-%d").map_err(|_| bad())
        }
        DateFormat::Unix | DateFormat::UnixMs => {
            let raw = field_number(record, key)?;
            let secs = if format == DateFormat::UnixMs { raw / 1000.0 } else { raw };
            DateTime::from_timestamp(secs.floor() as i64, 0).map(|t| t.date_naive()).ok_or_else(bad)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    struct Canned {
        body: String,
        calls: Cell<usize>,
    }

    impl Transport for &Canned {
        fn get(&self, _url: &str, _headers: &[(String, String)]) -> Result<Vec<u8>, FetchError> {
            self.calls.set(self.calls.get() + 1);
            Ok(self.body.clone().into_bytes())
        }
    }

    struct Down;

    impl Transport for Down {
        fn get(&self, url: &str, _headers: &[(String, String)]) -> Result<Vec<u8>, FetchError> {
            Err(FetchError::Transport(format!("connection refused: {url}")))
        }
    }

    const CANDLE_FEED: &str = r#"
name = "test-candles"
kind = "candles"
url = "http://localhost/ohlc?from={start_ts}&to={end_ts}"
records = "/data"
date_format = "unix"

[fields]
date = "t"
open = "o"
high = "h"
low = "l"
close = "c"
"#;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn body(days: usize, skip: Option<usize>) -> String {
        let start = d("2023-01-01").and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp();
        let rows: Vec<String> = (0..days)
            .filter(|i| Some(*i) != skip)
            .map(|i| format!(r#"{{"t":{},"o":100,"h":"110.5","l":99,"c":{}}}"#, start + 86_400 * i as i64, 100 + i % 10))
            .collect();
        format!(r#"{{"data":[{}]}}"#, rows.join(","))
    }

    #[test]
    fn cache_hit_is_identical_and_offline() {
        let dir = tempfile::tempdir().unwrap();
        let feed = FeedConfig::from_toml(CANDLE_FEED).unwrap();
        let range = DateRange::new(d("2023-01-01"), d("2023-03-02")).unwrap();
        let canned = Canned { body: body(61, None), calls: Cell::new(0) };
        let client = FeedClient::new(&canned, dir.path());
        let first = client.fetch_remote(&feed, &range).unwrap();
        assert_eq!(canned.calls.get(), 1);
        let cached = std::fs::read(client.cache_path(&feed, &range)).unwrap();

        let offline = FeedClient::new(Down, dir.path());
        let second = offline.fetch_remote(&feed, &range).unwrap();
        assert_eq!(first, second);
        assert_eq!(cached, std::fs::read(offline.cache_path(&feed, &range)).unwrap());
        match second {
            RemoteSeries::Candles(c) => {
                assert_eq!(c.len(), 61);
                assert_eq!(c[0].high, 110.5);
            }
            _ => panic!("expected candles"),
        }
    }

    #[test]
    fn partial_response_names_missing_day() {
        let dir = tempfile::tempdir().unwrap();
        let feed = FeedConfig::from_toml(CANDLE_FEED).unwrap();
        let range = DateRange::new(d("2023-01-01"), d("2023-03-02")).unwrap();
        let canned = Canned { body: body(61, Some(40)), calls: Cell::new(0) };
        let client = FeedClient::new(&canned, dir.path());
        match client.fetch_remote(&feed, &range) {
            Err(FetchError::MissingDays(days)) => assert_eq!(days, vec![d("2023-02-10")]),
            other => panic!("expected missing-days error, got {other:?}"),
        }
        assert!(!client.cache_path(&feed, &range).exists());
    }

    #[test]
    fn misnamed_field_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let feed = FeedConfig::from_toml(&CANDLE_FEED.replace("close = \"c\"", "close = \"close\"")).unwrap();
        let range = DateRange::new(d("2023-01-01"), d("2023-01-05")).unwrap();
        let canned = Canned { body: body(5, None), calls: Cell::new(0) };
        match FeedClient::new(&canned, dir.path()).fetch_remote(&feed, &range) {
            Err(FetchError::Schema(fields)) => assert_eq!(fields, vec!["close -> `close`".to_string()]),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn transport_failure_propagates() {
        let dir = tempfile::tempdir().unwrap();
        let feed = FeedConfig::from_toml(CANDLE_FEED).unwrap();
        let range = DateRange::new(d("2023-01-01"), d("2023-01-05")).unwrap();
        let err = FeedClient::new(Down, dir.path()).fetch_remote(&feed, &range).unwrap_err();
        assert!(matches!(err, FetchError::Transport(_)));
    }

    #[test]
    fn activity_feed_validates_cex_identity() {
        let cfg = r#"
name = "oi"
kind = "activity"
url = "http://localhost/{start}/{end}"
source = "lob-cex"
[fields]
date = "day"
volume = "v"
oi_long = "ol"
oi_short = "os"
liq_long = "ll"
liq_short = "ls"
"#;
        let feed = FeedConfig::from_toml(cfg).unwrap();
        assert_eq!(feed.render_url(&DateRange::new(d("2023-01-01"), d("2023-01-02")).unwrap()), "http://localhost/2023-01-01/2023-01-02");
        let dir = tempfile::tempdir().unwrap();
        let range = DateRange::new(d("2023-01-01"), d("2023-01-02")).unwrap();
        let good = Canned {
            body: r#"[{"day":"2023-01-01","v":1,"ol":5,"os":5,"ll":0,"ls":0},{"day":"2023-01-02","v":2,"ol":6,"os":6,"ll":1,"ls":0}]"#.into(),
            calls: Cell::new(0),
        };
        let series = FeedClient::new(&good, dir.path()).fetch_remote(&feed, &range).unwrap();
        assert!(matches!(series, RemoteSeries::Activity(ref s) if s.len() == 2));

        let dir = tempfile::tempdir().unwrap();
        let bad = Canned { body: good.body.replace("\"os\":6", "\"os\":4"), calls: Cell::new(0) };
        let err = FeedClient::new(&bad, dir.path()).fetch_remote(&feed, &range).unwrap_err();
        assert!(matches!(err, FetchError::Data(DataError::OiMismatch { .. })));
    }

    #[test]
    fn incomplete_mapping_rejected_at_load() {
        let err = FeedConfig::from_toml(&CANDLE_FEED.replace("low = \"l\"\n", "")).unwrap_err();
        assert!(matches!(err, FetchError::Config(_)));
    }
}
