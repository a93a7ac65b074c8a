//! Discounted-cash-flow valuation over simulated DAU scenarios.
//!
//! Daily profit is `rev_per_dau(t) / 365.25 * DAU(t) * margin`, aggregated
//! into quarters and discounted at the compound-equivalent quarterly rate.
//! All profits are assumed distributed to shareholders; the horizon is
//! finite with no terminal value.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::revenue::{LogisticParams, ScenarioLabel};
use crate::scenario::ScenarioSet;
use crate::timeseries::QuarterlyFinancials;

pub const DAYS_PER_YEAR: f64 = 365.25;
pub const DAYS_PER_QUARTER: f64 = DAYS_PER_YEAR / 4.0;

#[derive(Debug, Error)]
pub enum ValuationError {
    #[error("profit_margin must lie in (0, 1), got {0}")]
    BadMargin(f64),
    #[error("discount rate must be >= 0, got {0}")]
    BadDiscount(f64),
    #[error("shares_outstanding must be > 0")]
    ZeroShares,
    #[error("horizon_years must be > 0, got {0}")]
    BadHorizon(f64),
    #[error("scenario set is empty")]
    EmptyScenarioSet,
    #[error("no revenue schedule supplied")]
    NoSchedules,
    #[error("year {0} has zero total revenue; margin undefined")]
    ZeroRevenueYear(i32),
    #[error("no financial quarters supplied")]
    NoFinancials,
}

/// Valuation assumptions. Cash flows are quarterly by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValuationConfig {
    /// Fraction of revenue retained as profit.
    pub profit_margin: f64,
    /// Flat annual risk-adjusted discount rate.
    pub annual_discount_rate: f64,
    pub shares_outstanding: u64,
    /// Cash-flow horizon; trajectories longer than this are truncated.
    pub horizon_years: f64,
}

impl Default for ValuationConfig {
    fn default() -> Self {
        Self {
            profit_margin: 0.15,
            annual_discount_rate: 0.05,
            shares_outstanding: 699_000_000,
            horizon_years: 20.0,
        }
    }
}

impl ValuationConfig {
    pub fn validate(&self) -> Result<(), ValuationError> {
        if !(self.profit_margin > 0.0 && self.profit_margin < 1.0) {
            return Err(ValuationError::BadMargin(self.profit_margin));
        }
        if !(self.annual_discount_rate >= 0.0) {
            return Err(ValuationError::BadDiscount(self.annual_discount_rate));
        }
        if self.shares_outstanding == 0 {
            return Err(ValuationError::ZeroShares);
        }
        if !(self.horizon_years > 0.0) {
            return Err(ValuationError::BadHorizon(self.horizon_years));
        }
        Ok(())
    }

    pub fn horizon_days(&self) -> usize {
        (self.horizon_years * DAYS_PER_YEAR).round() as usize
    }
}

/// A revenue-per-DAU projection placed on the forecast's day axis:
/// forecast day `d` maps to `start_years + d / 365.25` on the fit's own
/// time axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevenueSchedule {
    pub params: LogisticParams,
    pub start_years: f64,
}

impl RevenueSchedule {
    /// USD per DAU per year in force on forecast day `day`.
    pub fn rate_on_day(&self, day: usize) -> f64 {
        self.params.value(self.start_years + day as f64 / DAYS_PER_YEAR)
    }
}

/// Daily profits summed into consecutive quarters (day `d` belongs to
/// quarter `floor(d / 91.3125)`), in day order within each quarter.
pub fn quarterly_profits(
    trajectory: &[f64],
    rev: &RevenueSchedule,
    profit_margin: f64,
    max_days: usize,
) -> Vec<f64> {
    let days = trajectory.len().min(max_days);
    if days == 0 {
        return Vec::new();
    }
    let n_quarters = ((days - 1) as f64 / DAYS_PER_QUARTER) as usize + 1;
    let mut quarters = vec![0.0_f64; n_quarters];
    for (day, &dau) in trajectory.iter().take(days).enumerate() {
        let q = (day as f64 / DAYS_PER_QUARTER) as usize;
        quarters[q] += rev.rate_on_day(day) / DAYS_PER_YEAR * dau * profit_margin;
    }
    quarters
}

/// Net present value of a quarterly profit stream: quarter `q` (0-based)
/// is discounted by `(1 + d_q)^(q+1)` with `d_q = (1 + d)^(1/4) - 1`.
pub fn npv_of_quarterly_profits(profits: &[f64], annual_rate: f64) -> f64 {
    let quarterly_rate = (1.0 + annual_rate).powf(0.25) - 1.0;
    let per_quarter = 1.0 / (1.0 + quarterly_rate);
    let mut discount = 1.0;
    let mut npv = 0.0;
    for &p in profits {
        discount *= per_quarter;
        npv += p * discount;
    }
    npv
}

/// Discounted value of one scenario trajectory under a revenue schedule.
pub fn scenario_npv(trajectory: &[f64], rev: &RevenueSchedule, cfg: &ValuationConfig) -> f64 {
    let profits = quarterly_profits(trajectory, rev, cfg.profit_margin, cfg.horizon_days());
    npv_of_quarterly_profits(&profits, cfg.annual_discount_rate)
}

/// Per-scenario NPVs with summary statistics and per-share figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuationDistribution {
    pub label: ScenarioLabel,
    pub per_scenario_npv: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    /// Empirical nearest-rank 2.5 / 97.5 percentiles across scenarios.
    pub ci95: (f64, f64),
    pub per_share_mean: f64,
    pub per_share_median: f64,
    pub per_share_ci95: (f64, f64),
}

fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if q <= 0.0 {
        return sorted[0];
    }
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Value every scenario under each labelled revenue schedule.
///
/// NPVs are computed in parallel but summarized in scenario order, so the
/// output is deterministic for a given input.
pub fn value_company(
    set: &ScenarioSet,
    schedules: &[(ScenarioLabel, RevenueSchedule)],
    cfg: &ValuationConfig,
) -> Result<Vec<ValuationDistribution>, ValuationError> {
    cfg.validate()?;
    if set.n_scenarios() == 0 {
        return Err(ValuationError::EmptyScenarioSet);
    }
    if schedules.is_empty() {
        return Err(ValuationError::NoSchedules);
    }
    let shares = cfg.shares_outstanding as f64;
    let mut out = Vec::with_capacity(schedules.len());
    for (label, schedule) in schedules {
        let npvs: Vec<f64> = set
            .trajectories()
            .par_iter()
            .map(|t| scenario_npv(t, schedule, cfg))
            .collect();
        let mean = npvs.iter().sum::<f64>() / npvs.len() as f64;
        let mut sorted = npvs.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        let median = nearest_rank(&sorted, 0.5);
        let ci95 = (nearest_rank(&sorted, 0.025), nearest_rank(&sorted, 0.975));
        out.push(ValuationDistribution {
            label: *label,
            mean,
            median,
            ci95,
            per_share_mean: mean / shares,
            per_share_median: median / shares,
            per_share_ci95: (ci95.0 / shares, ci95.1 / shares),
            per_scenario_npv: npvs,
        });
    }
    Ok(out)
}

/// One fiscal year of the margin table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YearlyMargin {
    pub year: i32,
    pub revenue: f64,
    pub net_income: f64,
    /// net_income / revenue rounded to integer percent.
    pub margin_pct: i64,
}

/// Aggregate quarterly financials into fiscal years and report the profit
/// margin per year at integer-percent rounding.
pub fn profit_margin_table(
    financials: &[QuarterlyFinancials],
) -> Result<Vec<YearlyMargin>, ValuationError> {
    if financials.is_empty() {
        return Err(ValuationError::NoFinancials);
    }
    let mut years: BTreeMap<i32, (f64, f64)> = BTreeMap::new();
    for q in financials {
        let entry = years.entry(q.fiscal_year()).or_insert((0.0, 0.0));
        entry.0 += q.revenue;
        entry.1 += q.net_income;
    }
    years
        .into_iter()
        .map(|(year, (revenue, net_income))| {
            if revenue == 0.0 {
                return Err(ValuationError::ZeroRevenueYear(year));
            }
            Ok(YearlyMargin {
                year,
                revenue,
                net_income,
                margin_pct: (net_income / revenue * 100.0).round() as i64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioSet;
    use approx::assert_relative_eq;
    use chrono::NaiveDate;

    fn flat_schedule(rate_per_year: f64) -> RevenueSchedule {
        // A saturated logistic is numerically flat at its ceiling.
        RevenueSchedule {
            params: LogisticParams {
                ceiling: rate_per_year,
                growth_rate: 1.0,
                midpoint_years: -4000.0,
            },
            start_years: 0.0,
        }
    }

    fn config(margin: f64, rate: f64, horizon_years: f64) -> ValuationConfig {
        ValuationConfig {
            profit_margin: margin,
            annual_discount_rate: rate,
            shares_outstanding: 699_000_000,
            horizon_years,
        }
    }

    #[test]
    fn undiscounted_flat_year_matches_arithmetic() {
        // 1M DAU at 36.525 USD/yr and 15% margin over one undiscounted year
        // is 5,478,750 USD up to the daily-grid rounding of the year length.
        let trajectory = vec![1e6; 366];
        let cfg = config(0.15, 0.0, 1.0);
        let npv = scenario_npv(&trajectory, &flat_schedule(36.525), &cfg);
        let expected = 1e6 * 36.525 * 0.15;
        assert!(
            (npv - expected).abs() / expected < 1e-3,
            "npv {npv} vs {expected}"
        );
    }

    #[test]
    fn quarterly_npv_matches_geometric_series() {
        for &rate in &[0.0, 0.05, 0.20] {
            let p = 2.5e8;
            let quarters = 80;
            let profits = vec![p; quarters];
            let npv = npv_of_quarterly_profits(&profits, rate);
            let dq = (1.0_f64 + rate).powf(0.25) - 1.0;
            let expected = if dq == 0.0 {
                p * quarters as f64
            } else {
                p * (1.0 - (1.0 + dq).powi(-(quarters as i32))) / dq
            };
            assert_relative_eq!(npv, expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn zero_dau_zero_value() {
        let trajectory = vec![0.0; 1000];
        let cfg = config(0.15, 0.05, 20.0);
        assert_eq!(scenario_npv(&trajectory, &flat_schedule(30.0), &cfg), 0.0);
    }

    #[test]
    fn npv_linear_in_trajectories() {
        let a: Vec<f64> = (0..800).map(|d| 1e6 + (d as f64) * 100.0).collect();
        let b: Vec<f64> = (0..800).map(|d| 5e5 + (d % 90) as f64 * 1e3).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let cfg = config(0.15, 0.05, 20.0);
        let sched = flat_schedule(25.0);
        let lhs = scenario_npv(&sum, &sched, &cfg);
        let rhs = scenario_npv(&a, &sched, &cfg) + scenario_npv(&b, &sched, &cfg);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn npv_monotone_in_margin_dau_and_discount() {
        let traj: Vec<f64> = (0..1500).map(|d| 4e7 * (1.0 - d as f64 * 1e-4)).collect();
        let bigger: Vec<f64> = traj.iter().map(|v| v * 1.1).collect();
        let sched = flat_schedule(30.0);
        let base = scenario_npv(&traj, &sched, &config(0.15, 0.05, 20.0));
        assert!(scenario_npv(&traj, &sched, &config(0.20, 0.05, 20.0)) >= base);
        assert!(scenario_npv(&bigger, &sched, &config(0.15, 0.05, 20.0)) >= base);
        assert!(scenario_npv(&traj, &sched, &config(0.15, 0.10, 20.0)) <= base);
    }

    #[test]
    fn identical_scenarios_collapse_interval() {
        let trajectories = vec![vec![2e6; 400]; 10];
        let set = ScenarioSet::from_parts(7, 400, trajectories, vec![vec![]; 10]).unwrap();
        let cfg = config(0.15, 0.05, 20.0);
        let out = value_company(
            &set,
            &[(ScenarioLabel::Base, flat_schedule(30.0))],
            &cfg,
        )
        .unwrap();
        let d = &out[0];
        assert_relative_eq!(d.ci95.0, d.mean, max_relative = 1e-12);
        assert_relative_eq!(d.ci95.1, d.mean, max_relative = 1e-12);
        assert_relative_eq!(d.median, d.mean, max_relative = 1e-12);
    }

    #[test]
    fn uniform_npv_mean_matches_order_statistics() {
        // NPVs drawn uniform(2.4e9, 4.4e9): the mean must sit near 3.4e9
        // within two standard errors of a uniform mean.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let n = 1000;
        let lo = 2.4e9;
        let hi = 4.4e9;
        let npvs: Vec<f64> = (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
        let mean = npvs.iter().sum::<f64>() / n as f64;
        let se = (hi - lo) / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean - 3.4e9).abs() < 2.0 * se, "mean {mean}");
    }

    #[test]
    fn per_share_times_shares_restores_usd() {
        let trajectories = vec![vec![3.3e7; 600]; 5];
        let set = ScenarioSet::from_parts(1, 600, trajectories, vec![vec![]; 5]).unwrap();
        let cfg = config(0.15, 0.05, 20.0);
        let out = value_company(&set, &[(ScenarioLabel::Base, flat_schedule(28.0))], &cfg).unwrap();
        let d = &out[0];
        assert!((d.per_share_mean * cfg.shares_outstanding as f64 - d.mean).abs() <= 1.0);
        assert!((d.per_share_ci95.1 * cfg.shares_outstanding as f64 - d.ci95.1).abs() <= 1.0);
    }

    #[test]
    fn margin_table_rounds_known_years() {
        let q = |end: &str, rev: f64, ni: f64| QuarterlyFinancials {
            quarter_end: NaiveDate::parse_from_str(end, "%Y-%m-%d").unwrap(),
            revenue: rev,
            net_income: ni,
        };
        // yearly totals fed as single records; grouping is by calendar year
        let financials = vec![
            q("2008-12-31", 19.41e6, -22.12e6),
            q("2009-12-31", 121.47e6, -52.82e6),
            q("2010-12-31", 597.46e6, 90.60e6),
            q("2011-12-31", 1065.65e6, -404.32e6),
        ];
        let table = profit_margin_table(&financials).unwrap();
        let margins: Vec<i64> = table.iter().map(|r| r.margin_pct).collect();
        assert_eq!(margins, vec![-114, -43, 15, -38]);
    }

    #[test]
    fn zero_revenue_year_is_an_error() {
        let q = QuarterlyFinancials {
            quarter_end: NaiveDate::from_ymd_opt(2012, 3, 31).unwrap(),
            revenue: 0.0,
            net_income: -1.0,
        };
        assert!(matches!(
            profit_margin_table(&[q]),
            Err(ValuationError::ZeroRevenueYear(2012))
        ));
    }
}
