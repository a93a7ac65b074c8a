//! Stage orchestration: ingest -> top-n -> fit-tails -> diagnose-innovation
//! -> simulate -> fit-revenue -> value, with content-hash caching and a run
//! manifest. Stages exchange data only through artifacts in the output
//! directory, so a stage whose outputs already exist under the same config
//! hash is skipped.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use dauval_core::decay::{DecayError, GameCurve};
use dauval_core::innovation;
use dauval_core::revenue::{self, LogisticParams, ScenarioLabel};
use dauval_core::scenario::{per_day_quantiles, simulate_all, SimConfig};
use dauval_core::timeseries::{self, DauSeries, GameCatalog};
use dauval_core::valuation::{self, RevenueSchedule, ValuationConfig};

use crate::artifacts::{self, *};
use crate::config::{ConfigError, LambdaSource, PipelineConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("report: {0}")]
    Report(String),
}

/// Pipeline stages in execution order.
pub const STAGE_NAMES: [&str; 7] = [
    "ingest",
    "top_n",
    "fit_tails",
    "diagnose_innovation",
    "simulate",
    "fit_revenue",
    "value",
];

/// Output artifacts per stage, relative to the output directory.
pub fn stage_outputs(stage: &str) -> &'static [&'static str] {
    match stage {
        "ingest" => &[CATALOG_CSV, FINANCIALS_CSV, INGEST_JSON],
        "top_n" => &[TOP_CATALOG_CSV, TOP_JSON],
        "fit_tails" => &[TAIL_FITS_JSON, TAIL_CURVES_CSV],
        "diagnose_innovation" => &[INNOVATION_JSON, COUNTING_CSV, AUTOCORR_CSV, QQ_CSV],
        "simulate" => &[SIMULATION_JSON, SCENARIOS_CSV, EVENTS_CSV, BAND_CSV],
        "fit_revenue" => &[REVENUE_JSON, REV_POINTS_CSV, REV_FITTED_CSV, COMPARISON_CSV],
        "value" => &[VALUATION_JSON, HISTOGRAM_CSV],
        other => panic!("unknown stage {other}"),
    }
}

/// Record of one executed (or cache-skipped) stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub outputs: Vec<String>,
    pub cache_hit: bool,
}

/// Written at the end of every run; `failed_stage` marks aborted runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub created_unix: u64,
    pub failed_stage: Option<String>,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn is_complete(&self) -> bool {
        self.failed_stage.is_none() && self.stages.len() == STAGE_NAMES.len()
    }
}

fn stage_err(stage: &'static str) -> impl Fn(String) -> PipelineError {
    move |message| PipelineError::Stage { stage, message }
}

/// Check that a prerequisite artifact from an earlier stage exists.
fn require(out: &Path, name: &str, producer: &str) -> Result<PathBuf, ConfigError> {
    let path = out.join(name);
    if !path.is_file() {
        return Err(ConfigError::MissingArtifact {
            path,
            hint: format!("dauval {producer}"),
        });
    }
    Ok(path)
}

/// Run the full pipeline with caching, write the manifest, and return it.
pub fn run_pipeline(config: &PipelineConfig, quiet: bool) -> Result<RunManifest, PipelineError> {
    config.validate()?;
    let config_hash = config.config_hash()?;
    let out = config.output.dir.clone();

    let previous: Option<RunManifest> = read_json(&out.join(MANIFEST_JSON)).ok();
    let cache_valid = previous
        .as_ref()
        .is_some_and(|m| m.config_hash == config_hash && m.failed_stage.is_none());

    let mut stages: Vec<StageRecord> = Vec::new();
    for stage in STAGE_NAMES {
        let outputs: Vec<String> = stage_outputs(stage).iter().map(|s| s.to_string()).collect();
        let cached = cache_valid && outputs.iter().all(|f| out.join(f).is_file());
        if cached {
            if !quiet {
                eprintln!("[dauval] {stage}: cached");
            }
            stages.push(StageRecord {
                name: stage.to_string(),
                outputs,
                cache_hit: true,
            });
            continue;
        }
        if let Err(e) = run_stage(stage, config) {
            // Retain partial progress with an explicit failure marker.
            let manifest = RunManifest {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                config_hash,
                master_seed: config.simulation.master_seed,
                created_unix: unix_now(),
                failed_stage: Some(stage.to_string()),
                stages,
            };
            let _ = write_json(&out.join(MANIFEST_JSON), &manifest);
            return Err(e);
        }
        if !quiet {
            eprintln!("[dauval] {stage}: done");
        }
        stages.push(StageRecord {
            name: stage.to_string(),
            outputs,
            cache_hit: false,
        });
    }

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash,
        master_seed: config.simulation.master_seed,
        created_unix: unix_now(),
        failed_stage: None,
        stages,
    };
    write_json(&out.join(MANIFEST_JSON), &manifest)
        .map_err(|e| stage_err("value")(format!("writing manifest: {e}")))?;
    Ok(manifest)
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Execute one stage by name (prerequisites must already exist).
pub fn run_stage(stage: &str, config: &PipelineConfig) -> Result<(), PipelineError> {
    match stage {
        "ingest" => stage_ingest(config),
        "top_n" => stage_top_n(config),
        "fit_tails" => stage_fit_tails(config),
        "diagnose_innovation" => stage_diagnose(config),
        "simulate" => stage_simulate(config),
        "fit_revenue" => stage_fit_revenue(config),
        "value" => stage_value(config),
        other => Err(PipelineError::Stage {
            stage: "unknown",
            message: format!("no stage named {other}"),
        }),
    }
}

fn stage_ingest(config: &PipelineConfig) -> Result<(), PipelineError> {
    let fail = stage_err("ingest");
    let out = &config.output.dir;
    let catalog = timeseries::ingest_dau_csv(&config.inputs.dau_csv, config.ingest.gap_policy)
        .map_err(|e| fail(e.to_string()))?;
    if catalog.is_empty() {
        return Err(fail("no games in input".into()));
    }
    let financials = timeseries::ingest_financials_csv(&config.inputs.financials_csv)
        .map_err(|e| fail(e.to_string()))?;

    write_catalog_csv(&out.join(CATALOG_CSV), &catalog).map_err(|e| fail(e.to_string()))?;
    write_financials_csv(&out.join(FINANCIALS_CSV), &financials)
        .map_err(|e| fail(e.to_string()))?;
    let summary = IngestSummary {
        n_games: catalog.len(),
        gap_policy: config.ingest.gap_policy.as_str().to_string(),
        data_start: catalog.epoch().expect("non-empty"),
        data_end: catalog.last_day().expect("non-empty"),
        total_observations: catalog.series().iter().map(|s| s.len() as u64).sum(),
    };
    write_json(&out.join(INGEST_JSON), &summary).map_err(|e| fail(e.to_string()))
}

fn stage_top_n(config: &PipelineConfig) -> Result<(), PipelineError> {
    let fail = stage_err("top_n");
    let out = &config.output.dir;
    let catalog_path = require(out, CATALOG_CSV, "ingest")?;
    let catalog = read_catalog_csv(&catalog_path).map_err(|e| fail(e.to_string()))?;

    // Games that never saw a positive DAU have no release day and nothing
    // to extrapolate; they cannot enter the pool.
    let with_release: Vec<DauSeries> = catalog
        .series()
        .iter()
        .filter(|s| s.release_day().is_some())
        .cloned()
        .collect();
    if with_release.is_empty() {
        return Err(fail("no game has a positive observation".into()));
    }
    let filtered = GameCatalog::new(with_release).map_err(|e| fail(e.to_string()))?;
    let selection =
        timeseries::top_n_by_peak(&filtered, config.ingest.top_n).map_err(|e| fail(e.to_string()))?;

    let ranked: Vec<RankedGame> = selection
        .catalog
        .series()
        .iter()
        .map(|s| RankedGame {
            game_id: s.game_id().to_string(),
            peak_dau: s.peak(),
            release_day: s.release_day().expect("filtered to released games"),
        })
        .collect();
    write_catalog_csv(&out.join(TOP_CATALOG_CSV), &selection.catalog)
        .map_err(|e| fail(e.to_string()))?;
    let summary = TopSummary {
        requested: selection.requested,
        available: selection.available,
        truncated: selection.truncated(),
        ranked,
    };
    write_json(&out.join(TOP_JSON), &summary).map_err(|e| fail(e.to_string()))
}

fn stage_fit_tails(config: &PipelineConfig) -> Result<(), PipelineError> {
    let fail = stage_err("fit_tails");
    let out = &config.output.dir;
    let top_catalog = read_catalog_csv(&require(out, TOP_CATALOG_CSV, "ingest")?)
        .map_err(|e| fail(e.to_string()))?;
    let top_meta: TopSummary =
        read_json(&require(out, TOP_JSON, "ingest")?).map_err(|e| fail(e.to_string()))?;

    let mut records = Vec::with_capacity(top_meta.ranked.len());
    let mut curves = Vec::with_capacity(top_meta.ranked.len());
    for ranked in &top_meta.ranked {
        let series = top_catalog
            .get(&ranked.game_id)
            .ok_or_else(|| fail(format!("game {} missing from top catalog", ranked.game_id)))?;
        let t_min_override = config.tails.t_min_overrides.get(&ranked.game_id).copied();
        let fitted = match t_min_override {
            Some(t_min) => GameCurve::from_series_with_t_min(series, t_min),
            None => GameCurve::from_series(series),
        };
        let (curve, fallback) = match fitted {
            Ok(curve) => (curve, None),
            // Too little decay history: hold the last observed level flat
            // rather than extrapolating from noise.
            Err(e @ (DecayError::TooShort { .. } | DecayError::TooFewPositive { .. })) => {
                let aligned: Vec<f64> = series
                    .release_aligned()
                    .ok_or_else(|| fail(format!("game {} has no release", ranked.game_id)))?
                    .iter()
                    .map(|&v| v as f64)
                    .collect();
                let curve = GameCurve::flat(ranked.game_id.clone(), aligned)
                    .map_err(|e| fail(e.to_string()))?;
                (curve, Some(e.to_string()))
            }
            Err(e) => return Err(fail(format!("game {}: {e}", ranked.game_id))),
        };
        records.push(TailFitRecord {
            game_id: ranked.game_id.clone(),
            t_min: curve.tail().t_min,
            gamma: curve.tail().gamma,
            scale: curve.tail().scale,
            anchor_dau: curve.anchor_dau(),
            fit_rmse: curve.tail().fit_rmse,
            clamped: curve.tail().clamped,
            flat_fallback: fallback,
            t_min_overridden: t_min_override.is_some(),
        });
        curves.push(curve);
    }
    write_json(&out.join(TAIL_FITS_JSON), &records).map_err(|e| fail(e.to_string()))?;

    let mut csv = String::from("game_id,t,observed,fit_line,projection\n");
    for curve in &curves {
        let obs_len = curve.observed_len();
        let horizon = obs_len + obs_len / 2;
        let tail = curve.tail();
        for t in 0..horizon {
            let observed = if t < obs_len {
                curve.observed()[t].to_string()
            } else {
                String::new()
            };
            let fit_line = if t >= tail.t_min && t < obs_len {
                (tail.scale * ((t - tail.t_min + 1) as f64).powf(-tail.gamma)).to_string()
            } else {
                String::new()
            };
            let projection = if t >= obs_len {
                curve.evaluate(t as u64).to_string()
            } else {
                String::new()
            };
            csv.push_str(&format!(
                "{},{t},{observed},{fit_line},{projection}\n",
                curve.game_id()
            ));
        }
    }
    std::fs::write(out.join(TAIL_CURVES_CSV), csv).map_err(|e| fail(e.to_string()))
}

/// Release days as day offsets (f64) from the first release in the log.
fn event_days(catalog: &GameCatalog) -> Result<Vec<f64>, String> {
    let log = timeseries::release_event_log(catalog).map_err(|e| e.to_string())?;
    let first = *log.first().ok_or("empty release log")?;
    Ok(log
        .iter()
        .map(|d| (*d - first).num_days() as f64)
        .collect())
}

fn stage_diagnose(config: &PipelineConfig) -> Result<(), PipelineError> {
    let fail = stage_err("diagnose_innovation");
    let out = &config.output.dir;
    let full = read_catalog_csv(&require(out, CATALOG_CSV, "ingest")?)
        .map_err(|e| fail(e.to_string()))?;
    let top = read_catalog_csv(&require(out, TOP_CATALOG_CSV, "ingest")?)
        .map_err(|e| fail(e.to_string()))?;

    let max_lag = config.innovation.max_lag;
    let days_all = event_days(&full).map_err(&fail)?;
    let days_top = event_days(&top).map_err(&fail)?;
    let report_all = innovation::diagnose(&days_all, max_lag).map_err(|e| fail(e.to_string()))?;
    let report_top = innovation::diagnose(&days_top, max_lag).map_err(|e| fail(e.to_string()))?;

    let estimated = match config.innovation.lambda_source {
        LambdaSource::TopN => report_top.fit.lambda,
        LambdaSource::All => report_all.fit.lambda,
    };
    let lambda_used = config.simulation.lambda_override.unwrap_or(estimated);

    let summary = InnovationSummary {
        top: InnovationSide {
            n_games: top.len(),
            report: report_top,
        },
        all: InnovationSide {
            n_games: full.len(),
            report: report_all,
        },
        lambda_source: config.innovation.lambda_source.as_str().to_string(),
        lambda_override: config.simulation.lambda_override,
        lambda_used,
    };
    write_json(&out.join(INNOVATION_JSON), &summary).map_err(|e| fail(e.to_string()))?;

    let mut counting = String::from("source,day,cumulative,expected\n");
    let mut autocorr = String::from("source,lag,correlation,ci_halfwidth\n");
    let mut qq = String::from("source,rank,theoretical,empirical,ecdf,fitted_cdf\n");
    for (source, side) in [("top_n", &summary.top), ("all", &summary.all)] {
        let r = &side.report;
        for p in &r.counting.pairs {
            counting.push_str(&format!("{source},{},{},{}\n", p.day, p.cumulative, p.expected));
        }
        for (lag, c) in r.autocorr.correlations.iter().enumerate() {
            autocorr.push_str(&format!(
                "{source},{lag},{c},{}\n",
                r.autocorr.ci_halfwidth
            ));
        }
        for (i, ((theo, emp), cdf)) in r.qq.pairs.iter().zip(&r.qq.cdf).enumerate() {
            qq.push_str(&format!(
                "{source},{},{theo},{emp},{},{}\n",
                i + 1,
                cdf.empirical,
                cdf.fitted
            ));
        }
    }
    std::fs::write(out.join(COUNTING_CSV), counting).map_err(|e| fail(e.to_string()))?;
    std::fs::write(out.join(AUTOCORR_CSV), autocorr).map_err(|e| fail(e.to_string()))?;
    std::fs::write(out.join(QQ_CSV), qq).map_err(|e| fail(e.to_string()))
}

fn stage_simulate(config: &PipelineConfig) -> Result<(), PipelineError> {
    let fail = stage_err("simulate");
    let out = &config.output.dir;
    let innovation_summary: InnovationSummary =
        read_json(&require(out, INNOVATION_JSON, "diagnose-innovation")?)
            .map_err(|e| fail(e.to_string()))?;
    let fits: Vec<TailFitRecord> = read_json(&require(out, TAIL_FITS_JSON, "fit-tails")?)
        .map_err(|e| fail(e.to_string()))?;
    let top_catalog = read_catalog_csv(&require(out, TOP_CATALOG_CSV, "ingest")?)
        .map_err(|e| fail(e.to_string()))?;

    let mut pool = Vec::with_capacity(fits.len());
    for rec in &fits {
        let series = top_catalog
            .get(&rec.game_id)
            .ok_or_else(|| fail(format!("game {} missing from top catalog", rec.game_id)))?;
        let aligned: Vec<f64> = series
            .release_aligned()
            .ok_or_else(|| fail(format!("game {} has no release", rec.game_id)))?
            .iter()
            .map(|&v| v as f64)
            .collect();
        pool.push(
            GameCurve::new(rec.game_id.clone(), aligned, rec.tail_params())
                .map_err(|e| fail(format!("game {}: {e}", rec.game_id)))?,
        );
    }
    let pool_ids: Vec<String> = pool.iter().map(|c| c.game_id().to_string()).collect();

    let sim_config = SimConfig {
        horizon_days: config.simulation.horizon_days,
        n_scenarios: config.simulation.n_scenarios,
        lambda: innovation_summary.lambda_used,
        pool,
        master_seed: config.simulation.master_seed,
    };
    let set = simulate_all(&sim_config).map_err(|e| fail(e.to_string()))?;

    write_scenarios_csv(&out.join(SCENARIOS_CSV), &set).map_err(|e| fail(e.to_string()))?;
    write_events_csv(&out.join(EVENTS_CSV), set.event_logs(), &pool_ids)
        .map_err(|e| fail(e.to_string()))?;
    let band = per_day_quantiles(&set, &[0.025, 0.5, 0.975]).map_err(|e| fail(e.to_string()))?;
    write_band_csv(&out.join(BAND_CSV), &band).map_err(|e| fail(e.to_string()))?;
    let summary = SimulationSummary {
        master_seed: config.simulation.master_seed,
        lambda: innovation_summary.lambda_used,
        lambda_source: innovation_summary.lambda_source.clone(),
        horizon_days: config.simulation.horizon_days,
        n_scenarios: config.simulation.n_scenarios,
        pool: pool_ids,
    };
    write_json(&out.join(SIMULATION_JSON), &summary).map_err(|e| fail(e.to_string()))
}

fn stage_fit_revenue(config: &PipelineConfig) -> Result<(), PipelineError> {
    let fail = stage_err("fit_revenue");
    let out = &config.output.dir;
    let financials = read_financials_csv(&require(out, FINANCIALS_CSV, "ingest")?)
        .map_err(|e| fail(e.to_string()))?;
    let catalog = read_catalog_csv(&require(out, CATALOG_CSV, "ingest")?)
        .map_err(|e| fail(e.to_string()))?;
    let aggregate = catalog
        .aggregate_daily()
        .ok_or_else(|| fail("empty catalog".into()))?;

    // Financials may reach further back than the DAU history (and the
    // trailing-year op requires covered windows), so trim to the span where
    // every point's 365-day window is observable. The first point needs
    // three predecessor quarters for its revenue sum, hence the -3.
    let covered = |end: chrono::NaiveDate| {
        aggregate
            .mean_over_window(end, revenue::TRAILING_WINDOW_DAYS)
            .is_some()
    };
    let first_covered = financials
        .iter()
        .position(|q| covered(q.quarter_end))
        .ok_or_else(|| fail("no financial quarter has a covered DAU window".into()))?;
    let last_covered = financials
        .iter()
        .rposition(|q| covered(q.quarter_end))
        .expect("some window is covered");
    let usable = &financials[first_covered.saturating_sub(3)..=last_covered];

    let points = revenue::trailing_year_rev_per_dau(usable, &aggregate)
        .map_err(|e| fail(e.to_string()))?;
    let (origin, pts_years) =
        revenue::points_in_years(&points).ok_or_else(|| fail("no usable points".into()))?;

    let ceilings = [
        (ScenarioLabel::Base, config.revenue.ceiling_base),
        (ScenarioLabel::High, config.revenue.ceiling_high),
        (ScenarioLabel::Extreme, config.revenue.ceiling_extreme),
    ];
    let mut scenarios = Vec::with_capacity(3);
    for (label, ceiling) in ceilings {
        let fit = revenue::fit_logistic(&pts_years, Some(ceiling))
            .map_err(|e| fail(format!("{} scenario: {e}", label.as_str())))?;
        scenarios.push(RevenueScenarioRecord {
            label,
            ceiling: fit.params.ceiling,
            growth_rate: fit.params.growth_rate,
            midpoint_years: fit.params.midpoint_years,
            rmse: fit.rmse,
            saturated: fit.saturated,
        });
    }
    let comparison = if pts_years.len() >= 5 {
        revenue::rolling_model_comparison(&pts_years)
            .map_err(|e| fail(e.to_string()))?
            .records
    } else {
        Vec::new()
    };
    let margin_table =
        valuation::profit_margin_table(&financials).map_err(|e| fail(e.to_string()))?;

    let summary = RevenueSummary {
        origin,
        points: points.clone(),
        scenarios: scenarios.clone(),
        comparison: comparison.clone(),
        margin_table,
    };
    write_json(&out.join(REVENUE_JSON), &summary).map_err(|e| fail(e.to_string()))?;

    let mut points_csv = String::from("quarter_end,yearly_revenue_usd,avg_dau,rev_per_dau\n");
    for p in &points {
        points_csv.push_str(&format!(
            "{},{},{},{}\n",
            p.quarter_end, p.yearly_revenue, p.avg_dau, p.rev_per_dau
        ));
    }
    std::fs::write(out.join(REV_POINTS_CSV), points_csv).map_err(|e| fail(e.to_string()))?;

    // Fitted curves on a quarterly grid over the data span plus 30 years.
    let t_last = pts_years.last().map(|p| p.0).unwrap_or(0.0);
    let mut fitted_csv = String::from("years,base,high,extreme\n");
    let mut t = 0.0;
    while t <= t_last + 30.0 {
        let row: Vec<String> = scenarios
            .iter()
            .map(|s| {
                LogisticParams {
                    ceiling: s.ceiling,
                    growth_rate: s.growth_rate,
                    midpoint_years: s.midpoint_years,
                }
                .value(t)
                .to_string()
            })
            .collect();
        fitted_csv.push_str(&format!("{t},{}\n", row.join(",")));
        t += 0.25;
    }
    std::fs::write(out.join(REV_FITTED_CSV), fitted_csv).map_err(|e| fail(e.to_string()))?;

    let mut cmp_csv = String::from("prefix_len,rmse_logistic,rmse_exponential\n");
    for rec in &comparison {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        cmp_csv.push_str(&format!(
            "{},{},{}\n",
            rec.prefix_len,
            fmt(rec.rmse_logistic),
            fmt(rec.rmse_exponential)
        ));
    }
    std::fs::write(out.join(COMPARISON_CSV), cmp_csv).map_err(|e| fail(e.to_string()))
}

fn stage_value(config: &PipelineConfig) -> Result<(), PipelineError> {
    let fail = stage_err("value");
    let out = &config.output.dir;
    let revenue_summary: RevenueSummary =
        read_json(&require(out, REVENUE_JSON, "fit-revenue")?).map_err(|e| fail(e.to_string()))?;
    let ingest_summary: IngestSummary =
        read_json(&require(out, INGEST_JSON, "ingest")?).map_err(|e| fail(e.to_string()))?;
    let sim_summary: SimulationSummary =
        read_json(&require(out, SIMULATION_JSON, "simulate")?).map_err(|e| fail(e.to_string()))?;
    let set = read_scenarios_csv(&require(out, SCENARIOS_CSV, "simulate")?, sim_summary.master_seed)
        .map_err(|e| fail(e.to_string()))?;

    // The forecast clock starts at the last observed day; move it onto the
    // revenue fit's own time axis.
    let start_years =
        (ingest_summary.data_end - revenue_summary.origin).num_days() as f64 / 365.25;
    let schedules: Vec<(ScenarioLabel, RevenueSchedule)> = revenue_summary
        .scenarios
        .iter()
        .map(|s| {
            (
                s.label,
                RevenueSchedule {
                    params: LogisticParams {
                        ceiling: s.ceiling,
                        growth_rate: s.growth_rate,
                        midpoint_years: s.midpoint_years,
                    },
                    start_years,
                },
            )
        })
        .collect();
    let valuation_config = ValuationConfig {
        profit_margin: config.valuation.profit_margin,
        annual_discount_rate: config.valuation.discount_rate,
        shares_outstanding: config.valuation.shares_outstanding,
        horizon_years: config.valuation.horizon_years,
    };
    let distributions = valuation::value_company(&set, &schedules, &valuation_config)
        .map_err(|e| fail(e.to_string()))?;

    let records: Vec<ValuationRecord> = distributions
        .iter()
        .map(|d| ValuationRecord {
            label: d.label,
            mean: d.mean,
            median: d.median,
            ci95: d.ci95,
            per_share_mean: d.per_share_mean,
            per_share_median: d.per_share_median,
            per_share_ci95: d.per_share_ci95,
        })
        .collect();
    let summary = ValuationSummary {
        n_scenarios: set.n_scenarios(),
        profit_margin: valuation_config.profit_margin,
        discount_rate: valuation_config.annual_discount_rate,
        shares_outstanding: valuation_config.shares_outstanding,
        horizon_years: valuation_config.horizon_years,
        scenarios: records,
    };
    write_json(&out.join(VALUATION_JSON), &summary).map_err(|e| fail(e.to_string()))?;

    let mut rows = Vec::new();
    for d in &distributions {
        for (lo, hi, count) in artifacts::histogram(&d.per_scenario_npv, 30) {
            rows.push((d.label.as_str().to_string(), lo, hi, count));
        }
    }
    write_histogram_csv(&out.join(HISTOGRAM_CSV), &rows).map_err(|e| fail(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_stage_has_outputs() {
        for stage in STAGE_NAMES {
            assert!(!stage_outputs(stage).is_empty());
        }
    }

    #[test]
    fn manifest_completeness() {
        let manifest = RunManifest {
            tool_version: "0".into(),
            config_hash: "h".into(),
            master_seed: 0,
            created_unix: 0,
            failed_stage: None,
            stages: STAGE_NAMES
                .iter()
                .map(|s| StageRecord {
                    name: s.to_string(),
                    outputs: vec![],
                    cache_hit: false,
                })
                .collect(),
        };
        assert!(manifest.is_complete());
        let mut failed = manifest.clone();
        failed.failed_stage = Some("simulate".into());
        assert!(!failed.is_complete());
    }
}
