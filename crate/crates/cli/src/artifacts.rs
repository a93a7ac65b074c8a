//! On-disk artifact schemas. Stages communicate only through these files,
//! which is what makes per-stage caching and resumption sound.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

use dauval_core::decay::TailParams;
use dauval_core::innovation::DiagnosticsReport;
use dauval_core::revenue::{PrefixRecord, RevenuePerDauPoint, ScenarioLabel};
use dauval_core::scenario::{InjectionEvent, ScenarioSet};
use dauval_core::timeseries::GameCatalog;

pub const CATALOG_CSV: &str = "catalog.csv";
pub const FINANCIALS_CSV: &str = "financials.csv";
pub const INGEST_JSON: &str = "ingest.json";
pub const TOP_CATALOG_CSV: &str = "top_catalog.csv";
pub const TOP_JSON: &str = "top_n.json";
pub const TAIL_FITS_JSON: &str = "tail_fits.json";
pub const TAIL_CURVES_CSV: &str = "tail_curves.csv";
pub const INNOVATION_JSON: &str = "innovation.json";
pub const COUNTING_CSV: &str = "counting.csv";
pub const AUTOCORR_CSV: &str = "autocorrelation.csv";
pub const QQ_CSV: &str = "qq.csv";
pub const SIMULATION_JSON: &str = "simulation.json";
pub const SCENARIOS_CSV: &str = "scenarios.csv";
pub const EVENTS_CSV: &str = "scenario_events.csv";
pub const BAND_CSV: &str = "quantile_band.csv";
pub const REVENUE_JSON: &str = "revenue.json";
pub const REV_POINTS_CSV: &str = "rev_per_dau.csv";
pub const REV_FITTED_CSV: &str = "rev_fitted.csv";
pub const COMPARISON_CSV: &str = "model_comparison.csv";
pub const VALUATION_JSON: &str = "valuation.json";
pub const HISTOGRAM_CSV: &str = "valuation_hist.csv";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const REPORT_MD: &str = "report.md";

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, message: impl ToString) -> ArtifactError {
    ArtifactError::Parse {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ArtifactError> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ArtifactError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e))
}

/// Normalized per-game DAU rows (`game_id,date,dau`), one row per day.
pub fn write_catalog_csv(path: &Path, catalog: &GameCatalog) -> Result<(), ArtifactError> {
    let mut out = String::from("game_id,date,dau\n");
    for series in catalog.series() {
        for (k, &v) in series.values().iter().enumerate() {
            let d = series.start_day() + Days::new(k as u64);
            out.push_str(&format!("{},{},{}\n", series.game_id(), d, v));
        }
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Re-ingest a normalized catalog artifact (no gaps by construction).
pub fn read_catalog_csv(path: &Path) -> Result<GameCatalog, ArtifactError> {
    dauval_core::timeseries::ingest_dau_csv(path, dauval_core::timeseries::GapPolicy::Reject)
        .map_err(|e| parse_err(path, e))
}

pub fn write_financials_csv(
    path: &Path,
    quarters: &[dauval_core::timeseries::QuarterlyFinancials],
) -> Result<(), ArtifactError> {
    let mut out = String::from("quarter_end,revenue_usd,net_income_usd\n");
    for q in quarters {
        out.push_str(&format!("{},{},{}\n", q.quarter_end, q.revenue, q.net_income));
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn read_financials_csv(
    path: &Path,
) -> Result<Vec<dauval_core::timeseries::QuarterlyFinancials>, ArtifactError> {
    dauval_core::timeseries::ingest_financials_csv(path).map_err(|e| parse_err(path, e))
}

/// Summary of the ingest stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestSummary {
    pub n_games: usize,
    pub gap_policy: String,
    pub data_start: NaiveDate,
    /// Last observed day; the forecast clock starts here.
    pub data_end: NaiveDate,
    pub total_observations: u64,
}

/// Summary of the top-n selection stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopSummary {
    pub requested: usize,
    pub available: usize,
    pub truncated: bool,
    /// Ranked by peak DAU, the order the pool keeps downstream.
    pub ranked: Vec<RankedGame>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankedGame {
    pub game_id: String,
    pub peak_dau: u64,
    pub release_day: NaiveDate,
}

/// One game's fitted tail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailFitRecord {
    pub game_id: String,
    pub t_min: usize,
    pub gamma: f64,
    pub scale: f64,
    pub anchor_dau: f64,
    pub fit_rmse: f64,
    /// Growth had not ended; the exponent was clamped to zero.
    pub clamped: bool,
    /// Set when the power-law fit was not possible and a flat tail was
    /// used instead (reason inside).
    pub flat_fallback: Option<String>,
    /// t_min came from configuration rather than peak selection.
    pub t_min_overridden: bool,
}

impl TailFitRecord {
    pub fn tail_params(&self) -> TailParams {
        TailParams {
            gamma: self.gamma,
            scale: self.scale,
            t_min: self.t_min,
            fit_rmse: self.fit_rmse,
            clamped: self.clamped,
        }
    }
}

/// Innovation diagnostics for one event log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InnovationSide {
    pub n_games: usize,
    pub report: DiagnosticsReport,
}

/// The diagnose-innovation stage artifact: both event logs plus the rate
/// the simulator will use.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InnovationSummary {
    pub top: InnovationSide,
    pub all: InnovationSide,
    pub lambda_source: String,
    pub lambda_override: Option<f64>,
    /// The rate handed to the simulator.
    pub lambda_used: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub master_seed: u64,
    pub lambda: f64,
    pub lambda_source: String,
    pub horizon_days: usize,
    pub n_scenarios: usize,
    pub pool: Vec<String>,
}

/// Long-form trajectory matrix: `scenario_index,day,dau`.
pub fn write_scenarios_csv(path: &Path, set: &ScenarioSet) -> Result<(), ArtifactError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "scenario_index,day,dau").map_err(io_err(path))?;
    for (s, trajectory) in set.trajectories().iter().enumerate() {
        for (day, &dau) in trajectory.iter().enumerate() {
            writeln!(w, "{s},{day},{dau}").map_err(io_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

pub fn read_scenarios_csv(
    path: &Path,
    master_seed: u64,
) -> Result<ScenarioSet, ArtifactError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| parse_err(path, e))?;
    let mut trajectories: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(path, e))?;
        let s: usize = record
            .get(0)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| parse_err(path, "bad scenario_index"))?;
        let day: usize = record
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| parse_err(path, "bad day"))?;
        let dau: f64 = record
            .get(2)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| parse_err(path, "bad dau"))?;
        if s >= trajectories.len() {
            trajectories.resize_with(s + 1, Vec::new);
        }
        if trajectories[s].len() != day {
            return Err(parse_err(path, format!("non-contiguous day {day} in scenario {s}")));
        }
        trajectories[s].push(dau);
    }
    let horizon = trajectories.first().map_or(0, Vec::len);
    let n = trajectories.len();
    ScenarioSet::from_parts(master_seed, horizon, trajectories, vec![Vec::new(); n])
        .map_err(|e| parse_err(path, e))
}

/// Per-scenario injection logs: `scenario_index,day,game_id`.
pub fn write_events_csv(
    path: &Path,
    logs: &[Vec<InjectionEvent>],
    pool_ids: &[String],
) -> Result<(), ArtifactError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "scenario_index,day,game_id").map_err(io_err(path))?;
    for (s, events) in logs.iter().enumerate() {
        for e in events {
            writeln!(w, "{s},{},{}", e.day, pool_ids[e.pool_index]).map_err(io_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Per-day quantile band: `day,q025,q500,q975`.
pub fn write_band_csv(path: &Path, rows: &[Vec<f64>]) -> Result<(), ArtifactError> {
    let mut out = String::from("day,q025,q500,q975\n");
    for (day, row) in rows.iter().enumerate() {
        out.push_str(&format!("{day},{},{},{}\n", row[0], row[1], row[2]));
    }
    fs::write(path, out).map_err(io_err(path))
}

/// One fitted revenue scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RevenueScenarioRecord {
    pub label: ScenarioLabel,
    pub ceiling: f64,
    pub growth_rate: f64,
    pub midpoint_years: f64,
    pub rmse: f64,
    pub saturated: bool,
}

/// The fit-revenue stage artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RevenueSummary {
    /// Dates convert to fractional years measured from here.
    pub origin: NaiveDate,
    pub points: Vec<RevenuePerDauPoint>,
    pub scenarios: Vec<RevenueScenarioRecord>,
    pub comparison: Vec<PrefixRecord>,
    /// Historical yearly margins from the same financials.
    pub margin_table: Vec<dauval_core::valuation::YearlyMargin>,
}

/// Valuation summary per scenario label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValuationRecord {
    pub label: ScenarioLabel,
    pub mean: f64,
    pub median: f64,
    pub ci95: (f64, f64),
    pub per_share_mean: f64,
    pub per_share_median: f64,
    pub per_share_ci95: (f64, f64),
}

/// The value stage artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValuationSummary {
    pub n_scenarios: usize,
    pub profit_margin: f64,
    pub discount_rate: f64,
    pub shares_outstanding: u64,
    pub horizon_years: f64,
    pub scenarios: Vec<ValuationRecord>,
}

/// Histogram rows: `label,bin_low,bin_high,count`.
pub fn write_histogram_csv(
    path: &Path,
    rows: &[(String, f64, f64, usize)],
) -> Result<(), ArtifactError> {
    let mut out = String::from("label,bin_low,bin_high,count\n");
    for (label, lo, hi, count) in rows {
        out.push_str(&format!("{label},{lo},{hi},{count}\n"));
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Equal-width histogram of one sample.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return vec![(min, max, values.len())];
    }
    let width = (max - min) / bins as f64;
    let mut counts = vec![0_usize; bins];
    for &v in values {
        let idx = (((v - min) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (min + i as f64 * width, min + (i + 1) as f64 * width, c))
        .collect()
}
