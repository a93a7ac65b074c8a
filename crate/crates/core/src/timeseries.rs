//! Per-game daily-active-user histories: CSV ingestion, validation, and
//! catalog-level selection.
//!
//! All model math downstream works in integer day offsets; calendar dates
//! appear only at the I/O boundary (CSV in, JSON/CSV out).

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How to handle missing days between observations of one game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapPolicy {
    /// Any gap is an ingestion error.
    Reject,
    /// Missing days are stored as zero DAU.
    #[default]
    FillZero,
    /// Missing days are linearly interpolated between the surrounding
    /// observations and rounded to the nearest count.
    Interpolate,
}

impl GapPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            GapPolicy::Reject => "reject",
            GapPolicy::FillZero => "fill_zero",
            GapPolicy::Interpolate => "interpolate",
        }
    }
}

impl std::str::FromStr for GapPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reject" => Ok(GapPolicy::Reject),
            "fill_zero" => Ok(GapPolicy::FillZero),
            "interpolate" => Ok(GapPolicy::Interpolate),
            other => Err(format!(
                "unknown gap policy `{other}` (expected reject, fill_zero or interpolate)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad header: expected `{expected}`, got `{got}`")]
    BadHeader { expected: String, got: String },
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: duplicate observation for game `{game_id}` on {date}")]
    DuplicateDay {
        game_id: String,
        date: NaiveDate,
        line: u64,
    },
    #[error("game `{game_id}`: gap between {from} and {to} under the `reject` policy")]
    Gap {
        game_id: String,
        from: NaiveDate,
        to: NaiveDate,
    },
    #[error("series for game `{game_id}` is empty")]
    EmptySeries { game_id: String },
    #[error("duplicate game id `{0}` in catalog")]
    DuplicateGameId(String),
    #[error("catalog is empty")]
    EmptyCatalog,
    #[error("top-n selection requires n >= 1")]
    ZeroTopN,
    #[error("duplicate financial quarter ending {0}")]
    DuplicateQuarter(NaiveDate),
    #[error("negative revenue {revenue} in quarter ending {quarter_end}")]
    NegativeRevenue { quarter_end: NaiveDate, revenue: f64 },
}

/// One game's observed DAU counts over consecutive calendar days.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DauSeries {
    game_id: String,
    start_day: NaiveDate,
    values: Vec<u64>,
}

impl DauSeries {
    /// Build a series; `values` holds one count per consecutive day starting
    /// at `start_day` and must be non-empty.
    pub fn new(
        game_id: impl Into<String>,
        start_day: NaiveDate,
        values: Vec<u64>,
    ) -> Result<Self, IngestError> {
        let game_id = game_id.into();
        if values.is_empty() {
            return Err(IngestError::EmptySeries { game_id });
        }
        Ok(Self {
            game_id,
            start_day,
            values,
        })
    }

    pub fn game_id(&self) -> &str {
        &self.game_id
    }

    pub fn start_day(&self) -> NaiveDate {
        self.start_day
    }

    pub fn end_day(&self) -> NaiveDate {
        self.start_day + Days::new(self.values.len() as u64 - 1)
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // length >= 1 by construction
    }

    /// Largest observed DAU.
    pub fn peak(&self) -> u64 {
        *self.values.iter().max().expect("non-empty")
    }

    /// Index of the first day with DAU > 0, if any.
    pub fn release_index(&self) -> Option<usize> {
        self.values.iter().position(|&v| v > 0)
    }

    /// Calendar date of the first day with DAU > 0, if any.
    pub fn release_day(&self) -> Option<NaiveDate> {
        self.release_index()
            .map(|i| self.start_day + Days::new(i as u64))
    }

    /// Values from the release day onward (drops leading zeros).
    pub fn release_aligned(&self) -> Option<&[u64]> {
        self.release_index().map(|i| &self.values[i..])
    }
}

/// A validated collection of per-game series with unique game ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameCatalog {
    series: Vec<DauSeries>,
}

impl GameCatalog {
    pub fn new(series: Vec<DauSeries>) -> Result<Self, IngestError> {
        let mut seen = std::collections::BTreeSet::new();
        for s in &series {
            if !seen.insert(s.game_id().to_owned()) {
                return Err(IngestError::DuplicateGameId(s.game_id().to_owned()));
            }
        }
        Ok(Self { series })
    }

    pub fn series(&self) -> &[DauSeries] {
        &self.series
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn get(&self, game_id: &str) -> Option<&DauSeries> {
        self.series.iter().find(|s| s.game_id() == game_id)
    }

    /// Earliest observed day across all series.
    pub fn epoch(&self) -> Option<NaiveDate> {
        self.series.iter().map(|s| s.start_day()).min()
    }

    /// Latest observed day across all series.
    pub fn last_day(&self) -> Option<NaiveDate> {
        self.series.iter().map(|s| s.end_day()).max()
    }

    /// Company-wide total DAU per day over the catalog's full date range.
    /// Days where a game has no observation contribute zero for that game.
    pub fn aggregate_daily(&self) -> Option<DailyAggregate> {
        let start = self.epoch()?;
        let end = self.last_day()?;
        let n_days = (end - start).num_days() as usize + 1;
        let mut values = vec![0.0_f64; n_days];
        for s in &self.series {
            let offset = (s.start_day() - start).num_days() as usize;
            for (k, &v) in s.values().iter().enumerate() {
                values[offset + k] += v as f64;
            }
        }
        Some(DailyAggregate {
            start_day: start,
            values,
        })
    }
}

/// Company-wide total DAU per day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyAggregate {
    pub start_day: NaiveDate,
    pub values: Vec<f64>,
}

impl DailyAggregate {
    pub fn end_day(&self) -> NaiveDate {
        self.start_day + Days::new(self.values.len() as u64 - 1)
    }

    /// Arithmetic mean over the `window_days`-day window ending at `end`
    /// (inclusive). `None` when the window is not fully covered by data.
    pub fn mean_over_window(&self, end: NaiveDate, window_days: u64) -> Option<f64> {
        if window_days == 0 {
            return None;
        }
        let window_start = end.checked_sub_days(Days::new(window_days - 1))?;
        if window_start < self.start_day || end > self.end_day() {
            return None;
        }
        let a = (window_start - self.start_day).num_days() as usize;
        let b = (end - self.start_day).num_days() as usize;
        let slice = &self.values[a..=b];
        Some(slice.iter().sum::<f64>() / slice.len() as f64)
    }
}

/// One quarter of company financials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarterlyFinancials {
    pub quarter_end: NaiveDate,
    pub revenue: f64,
    pub net_income: f64,
}

impl QuarterlyFinancials {
    pub fn fiscal_year(&self) -> i32 {
        self.quarter_end.year()
    }
}

/// Result of a top-n selection. `truncated` is set when fewer games were
/// available than requested.
#[derive(Debug, Clone)]
pub struct TopSelection {
    pub catalog: GameCatalog,
    pub requested: usize,
    pub available: usize,
}

impl TopSelection {
    pub fn truncated(&self) -> bool {
        self.requested > self.available
    }
}

/// Parse the DAU CSV (`game_id,date,dau`) into a validated catalog.
///
/// Rows are grouped by game and sorted by date; duplicate (game, date)
/// pairs are rejected, and day gaps are repaired or rejected per `policy`.
pub fn ingest_dau_csv(path: impl AsRef<Path>, policy: GapPolicy) -> Result<GameCatalog, IngestError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => IngestError::Io {
                path: path.display().to_string(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => IngestError::Csv(e),
        })?;

    expect_header(&mut reader, &["game_id", "date", "dau"])?;

    // game_id -> date -> (dau, line)
    let mut per_game: BTreeMap<String, BTreeMap<NaiveDate, u64>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(IngestError::MalformedRow {
                line,
                reason: format!("expected 3 fields, got {}", record.len()),
            });
        }
        let game_id = record.get(0).unwrap_or_default();
        if game_id.is_empty() {
            return Err(IngestError::MalformedRow {
                line,
                reason: "empty game_id".into(),
            });
        }
        let date = parse_date(record.get(1).unwrap_or_default(), line)?;
        let dau: u64 = record
            .get(2)
            .unwrap_or_default()
            .parse()
            .map_err(|_| IngestError::MalformedRow {
                line,
                reason: format!(
                    "dau must be a base-10 non-negative integer, got `{}`",
                    record.get(2).unwrap_or_default()
                ),
            })?;
        if per_game
            .entry(game_id.to_owned())
            .or_default()
            .insert(date, dau)
            .is_some()
        {
            return Err(IngestError::DuplicateDay {
                game_id: game_id.to_owned(),
                date,
                line,
            });
        }
    }

    let mut series = Vec::with_capacity(per_game.len());
    for (game_id, days) in per_game {
        series.push(build_series(game_id, &days, policy)?);
    }
    GameCatalog::new(series)
}

/// Parse the financials CSV (`quarter_end,revenue_usd,net_income_usd`),
/// sorted by quarter end, strictly increasing, revenue non-negative.
pub fn ingest_financials_csv(path: impl AsRef<Path>) -> Result<Vec<QuarterlyFinancials>, IngestError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => IngestError::Io {
                path: path.display().to_string(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => IngestError::Csv(e),
        })?;

    expect_header(&mut reader, &["quarter_end", "revenue_usd", "net_income_usd"])?;

    let mut quarters: BTreeMap<NaiveDate, QuarterlyFinancials> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(IngestError::MalformedRow {
                line,
                reason: format!("expected 3 fields, got {}", record.len()),
            });
        }
        let quarter_end = parse_date(record.get(0).unwrap_or_default(), line)?;
        let revenue = parse_f64(record.get(1).unwrap_or_default(), "revenue_usd", line)?;
        let net_income = parse_f64(record.get(2).unwrap_or_default(), "net_income_usd", line)?;
        if revenue < 0.0 {
            return Err(IngestError::NegativeRevenue {
                quarter_end,
                revenue,
            });
        }
        let q = QuarterlyFinancials {
            quarter_end,
            revenue,
            net_income,
        };
        if quarters.insert(quarter_end, q).is_some() {
            return Err(IngestError::DuplicateQuarter(quarter_end));
        }
    }
    Ok(quarters.into_values().collect())
}

/// The `n` games with the largest all-time peak DAU. Ties break toward the
/// earlier release day, then the lexicographically smaller game id.
pub fn top_n_by_peak(catalog: &GameCatalog, n: usize) -> Result<TopSelection, IngestError> {
    if n == 0 {
        return Err(IngestError::ZeroTopN);
    }
    if catalog.is_empty() {
        return Err(IngestError::EmptyCatalog);
    }
    let mut ranked: Vec<&DauSeries> = catalog.series().iter().collect();
    ranked.sort_by(|a, b| {
        b.peak()
            .cmp(&a.peak())
            .then_with(|| rank_date(a).cmp(&rank_date(b)))
            .then_with(|| a.game_id().cmp(b.game_id()))
    });
    let available = ranked.len();
    let taken: Vec<DauSeries> = ranked.into_iter().take(n).cloned().collect();
    Ok(TopSelection {
        catalog: GameCatalog::new(taken)?,
        requested: n,
        available,
    })
}

fn rank_date(s: &DauSeries) -> NaiveDate {
    // Games that never saw a positive DAU have no release; sort them last
    // among equal peaks.
    s.release_day().unwrap_or(NaiveDate::MAX)
}

/// Release days (first day with DAU > 0) of all games, sorted ascending.
/// Games with no positive observation carry no release and are skipped.
pub fn release_event_log(catalog: &GameCatalog) -> Result<Vec<NaiveDate>, IngestError> {
    if catalog.is_empty() {
        return Err(IngestError::EmptyCatalog);
    }
    let mut days: Vec<NaiveDate> = catalog
        .series()
        .iter()
        .filter_map(|s| s.release_day())
        .collect();
    days.sort_unstable();
    Ok(days)
}

fn expect_header<R: std::io::Read>(
    reader: &mut csv::Reader<R>,
    expected: &[&str],
) -> Result<(), IngestError> {
    let headers = reader.headers()?.clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(IngestError::BadHeader {
            expected: expected.join(","),
            got: got.join(","),
        });
    }
    Ok(())
}

fn parse_date(s: &str, line: u64) -> Result<NaiveDate, IngestError> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| IngestError::MalformedRow {
        line,
        reason: format!("date must be ISO-8601 YYYY-MM-DD, got `{s}`"),
    })
}

fn parse_f64(s: &str, field: &str, line: u64) -> Result<f64, IngestError> {
    let v: f64 = s.parse().map_err(|_| IngestError::MalformedRow {
        line,
        reason: format!("{field} must be a number, got `{s}`"),
    })?;
    if !v.is_finite() {
        return Err(IngestError::MalformedRow {
            line,
            reason: format!("{field} must be finite, got `{s}`"),
        });
    }
    Ok(v)
}

fn build_series(
    game_id: String,
    days: &BTreeMap<NaiveDate, u64>,
    policy: GapPolicy,
) -> Result<DauSeries, IngestError> {
    let mut iter = days.iter();
    let (&first_day, &first_val) = iter.next().ok_or_else(|| IngestError::EmptySeries {
        game_id: game_id.clone(),
    })?;
    let mut values = vec![first_val];
    let mut prev_day = first_day;
    let mut prev_val = first_val;
    for (&day, &val) in iter {
        let gap = (day - prev_day).num_days() - 1;
        if gap > 0 {
            match policy {
                GapPolicy::Reject => {
                    return Err(IngestError::Gap {
                        game_id,
                        from: prev_day,
                        to: day,
                    });
                }
                GapPolicy::FillZero => values.extend(std::iter::repeat_n(0, gap as usize)),
                GapPolicy::Interpolate => {
                    let span = (gap + 1) as f64;
                    for k in 1..=gap {
                        let frac = k as f64 / span;
                        let v = prev_val as f64 + (val as f64 - prev_val as f64) * frac;
                        values.push(v.round() as u64);
                    }
                }
            }
        }
        values.push(val);
        prev_day = day;
        prev_val = val;
    }
    DauSeries::new(game_id, first_day, values)
}
