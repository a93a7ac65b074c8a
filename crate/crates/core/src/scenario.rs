//! Seeded Monte Carlo forecast of aggregate DAU: existing pool curves
//! continue from their current age while new games are injected on an
//! exponential event stream and drawn uniformly from the pool.
//!
//! Every scenario consumes its own counter-based ChaCha substream keyed by
//! (master_seed, scenario_index), so the output is bit-identical under any
//! degree of parallelism.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decay::GameCurve;

/// Refuse to build trajectory matrices larger than this.
const MAX_MATRIX_BYTES: usize = 4 << 30;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("pool of game curves is empty")]
    EmptyPool,
    #[error("horizon_days must be >= 1")]
    BadHorizon,
    #[error("n_scenarios must be >= 1")]
    BadScenarioCount,
    #[error("lambda must be > 0, got {0}")]
    BadLambda(f64),
    #[error("scenario index {index} out of range (n_scenarios = {n})")]
    IndexOutOfRange { index: usize, n: usize },
    #[error(
        "trajectory matrix would need {bytes} bytes ({n_scenarios} x {horizon_days}), cap is {cap}; nothing was simulated"
    )]
    TooLarge {
        bytes: u128,
        n_scenarios: usize,
        horizon_days: usize,
        cap: usize,
    },
    #[error("quantile range must satisfy 0 <= low < high <= 1, got ({low}, {high})")]
    QuantileRange { low: f64, high: f64 },
    #[error("scenario set is empty")]
    EmptySet,
}

/// Simulation inputs.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Forecast length in days (default 7300, about 20 years).
    pub horizon_days: usize,
    /// Number of Monte Carlo scenarios (default 1000).
    pub n_scenarios: usize,
    /// Innovation rate in new games per day.
    pub lambda: f64,
    /// Existing games; injected copies are drawn uniformly from this pool.
    pub pool: Vec<GameCurve>,
    pub master_seed: u64,
}

pub const DEFAULT_HORIZON_DAYS: usize = 7300;
pub const DEFAULT_N_SCENARIOS: usize = 1000;

impl SimConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.pool.is_empty() {
            return Err(ScenarioError::EmptyPool);
        }
        if self.horizon_days == 0 {
            return Err(ScenarioError::BadHorizon);
        }
        if self.n_scenarios == 0 {
            return Err(ScenarioError::BadScenarioCount);
        }
        if !(self.lambda > 0.0) {
            return Err(ScenarioError::BadLambda(self.lambda));
        }
        Ok(())
    }
}

/// One injected game: the day it enters and the pool game it replays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionEvent {
    pub day: u32,
    pub pool_index: usize,
}

/// The full set of simulated trajectories plus per-scenario event logs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    master_seed: u64,
    horizon_days: usize,
    trajectories: Vec<Vec<f64>>,
    event_logs: Vec<Vec<InjectionEvent>>,
}

impl ScenarioSet {
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn horizon_days(&self) -> usize {
        self.horizon_days
    }

    pub fn n_scenarios(&self) -> usize {
        self.trajectories.len()
    }

    pub fn trajectories(&self) -> &[Vec<f64>] {
        &self.trajectories
    }

    pub fn trajectory(&self, index: usize) -> &[f64] {
        &self.trajectories[index]
    }

    pub fn event_logs(&self) -> &[Vec<InjectionEvent>] {
        &self.event_logs
    }

    /// Rebuild a set from stored parts (artifact reload path).
    pub fn from_parts(
        master_seed: u64,
        horizon_days: usize,
        trajectories: Vec<Vec<f64>>,
        event_logs: Vec<Vec<InjectionEvent>>,
    ) -> Result<Self, ScenarioError> {
        if trajectories.is_empty() {
            return Err(ScenarioError::EmptySet);
        }
        if trajectories.iter().any(|t| t.len() != horizon_days) {
            return Err(ScenarioError::BadHorizon);
        }
        Ok(Self {
            master_seed,
            horizon_days,
            trajectories,
            event_logs,
        })
    }
}

/// Per-pool-game curve values precomputed over the horizon, plus the
/// deterministic baseline contributed by the existing games continuing
/// from their current age (their last observed day).
struct CurveTables {
    baseline: Vec<f64>,
    injected: Vec<Vec<f64>>,
}

fn build_tables(pool: &[GameCurve], horizon_days: usize) -> CurveTables {
    let mut baseline = vec![0.0_f64; horizon_days];
    for curve in pool {
        let age = (curve.observed_len() - 1) as u64;
        for (t, slot) in baseline.iter_mut().enumerate() {
            *slot += curve.evaluate(age + t as u64);
        }
    }
    let injected = pool.iter().map(|c| c.sample(horizon_days)).collect();
    CurveTables { baseline, injected }
}

fn run_one(
    cfg: &SimConfig,
    tables: &CurveTables,
    index: usize,
) -> (Vec<f64>, Vec<InjectionEvent>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    rng.set_stream(index as u64);

    let mut trajectory = tables.baseline.clone();
    let mut events = Vec::new();
    let horizon = cfg.horizon_days as f64;
    let pool_len = cfg.pool.len();
    let mut clock = 0.0_f64;
    loop {
        // Inverse-transform exponential gap; the game pick consumes the
        // next draw so event k maps to the same (gap, pick) pair for any
        // lambda, which is what couples runs across lambda values.
        let u: f64 = rng.random();
        clock += -(1.0 - u).ln() / cfg.lambda;
        if !(clock < horizon) {
            break;
        }
        let day = clock as usize;
        let pick: f64 = rng.random();
        let pool_index = ((pick * pool_len as f64) as usize).min(pool_len - 1);
        events.push(InjectionEvent {
            day: day as u32,
            pool_index,
        });
        let curve = &tables.injected[pool_index];
        for (slot, v) in trajectory[day..].iter_mut().zip(curve.iter()) {
            *slot += v;
        }
    }
    (trajectory, events)
}

/// Simulate a single scenario. The trajectory depends only on
/// (master_seed, scenario_index); day `t` sums every existing pool game at
/// age `current + t` and every injected game at age `t - injection_day`.
pub fn simulate_scenario(
    cfg: &SimConfig,
    index: usize,
) -> Result<(Vec<f64>, Vec<InjectionEvent>), ScenarioError> {
    cfg.validate()?;
    if index >= cfg.n_scenarios {
        return Err(ScenarioError::IndexOutOfRange {
            index,
            n: cfg.n_scenarios,
        });
    }
    let tables = build_tables(&cfg.pool, cfg.horizon_days);
    Ok(run_one(cfg, &tables, index))
}

/// Simulate all scenarios. Scenarios run in parallel; the result is
/// bit-identical for a given config regardless of thread count.
pub fn simulate_all(cfg: &SimConfig) -> Result<ScenarioSet, ScenarioError> {
    cfg.validate()?;
    let bytes = (cfg.n_scenarios as u128) * (cfg.horizon_days as u128) * 8;
    if bytes > MAX_MATRIX_BYTES as u128 {
        return Err(ScenarioError::TooLarge {
            bytes,
            n_scenarios: cfg.n_scenarios,
            horizon_days: cfg.horizon_days,
            cap: MAX_MATRIX_BYTES,
        });
    }
    let tables = build_tables(&cfg.pool, cfg.horizon_days);
    let results: Vec<(Vec<f64>, Vec<InjectionEvent>)> = (0..cfg.n_scenarios)
        .into_par_iter()
        .map(|i| run_one(cfg, &tables, i))
        .collect();
    let mut trajectories = Vec::with_capacity(cfg.n_scenarios);
    let mut event_logs = Vec::with_capacity(cfg.n_scenarios);
    for (t, e) in results {
        trajectories.push(t);
        event_logs.push(e);
    }
    Ok(ScenarioSet {
        master_seed: cfg.master_seed,
        horizon_days: cfg.horizon_days,
        trajectories,
        event_logs,
    })
}

/// Nearest-rank quantile of a sorted slice.
fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if q <= 0.0 {
        return sorted[0];
    }
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Per-day empirical quantiles across scenarios (nearest-rank), one row of
/// output per day, one column per requested quantile.
pub fn per_day_quantiles(set: &ScenarioSet, qs: &[f64]) -> Result<Vec<Vec<f64>>, ScenarioError> {
    if set.n_scenarios() == 0 {
        return Err(ScenarioError::EmptySet);
    }
    for &q in qs {
        if !(0.0..=1.0).contains(&q) {
            return Err(ScenarioError::QuantileRange { low: q, high: q });
        }
    }
    let mut out = Vec::with_capacity(set.horizon_days());
    let mut column = vec![0.0_f64; set.n_scenarios()];
    for day in 0..set.horizon_days() {
        for (s, slot) in column.iter_mut().enumerate() {
            *slot = set.trajectories[s][day];
        }
        column.sort_unstable_by(f64::total_cmp);
        out.push(qs.iter().map(|&q| nearest_rank(&column, q)).collect());
    }
    Ok(out)
}

/// Per-day (low, high) quantile band across scenarios.
pub fn quantile_band(
    set: &ScenarioSet,
    q_low: f64,
    q_high: f64,
) -> Result<Vec<(f64, f64)>, ScenarioError> {
    if !(0.0..=1.0).contains(&q_low) || !(0.0..=1.0).contains(&q_high) || q_low >= q_high {
        return Err(ScenarioError::QuantileRange {
            low: q_low,
            high: q_high,
        });
    }
    let rows = per_day_quantiles(set, &[q_low, q_high])?;
    Ok(rows.into_iter().map(|r| (r[0], r[1])).collect())
}
