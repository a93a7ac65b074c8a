//! Trailing-year revenue per DAU and logistic growth fits under competing
//! ceiling scenarios, plus the rolling exponential-vs-logistic comparison.
//!
//! Times are fractional years measured from the first data point; rates are
//! per year; revenue-per-DAU values are USD per DAU per year.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeseries::{DailyAggregate, QuarterlyFinancials};

/// Days averaged for the trailing-year DAU mean.
pub const TRAILING_WINDOW_DAYS: u64 = 365;

#[derive(Debug, Error)]
pub enum RevenueError {
    #[error("need at least {need} quarters, got {have}")]
    TooFewQuarters { have: usize, need: usize },
    #[error("quarters must be strictly increasing at {0}")]
    QuartersUnordered(NaiveDate),
    #[error("DAU data does not cover the {window_days}-day window ending {window_end}")]
    CoverageGap {
        window_end: NaiveDate,
        window_days: u64,
    },
    #[error("average DAU is zero over the window ending {window_end}")]
    ZeroAverageDau { window_end: NaiveDate },
    #[error("need at least {need} points, got {have}")]
    TooFewPoints { have: usize, need: usize },
    #[error("all fit points must be strictly positive, got {value} at t = {t}")]
    NonPositivePoint { t: f64, value: f64 },
    #[error("fit points must span more than one time value")]
    DegenerateTimeAxis,
    #[error("ceiling must be positive, got {0}")]
    BadCeiling(f64),
    #[error("no start converged after multi-start refinement; best rmse {best_rmse}")]
    NonConvergence { best_rmse: f64 },
}

/// Revenue scenario labels, ordered by their revenue-per-DAU ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioLabel {
    Base,
    High,
    Extreme,
}

impl ScenarioLabel {
    pub const ALL: [ScenarioLabel; 3] =
        [ScenarioLabel::Base, ScenarioLabel::High, ScenarioLabel::Extreme];

    /// Revenue-per-DAU saturation ceiling in USD/DAU/year.
    pub fn default_ceiling(self) -> f64 {
        match self {
            ScenarioLabel::Base => 30.0,
            ScenarioLabel::High => 35.0,
            ScenarioLabel::Extreme => 43.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioLabel::Base => "base",
            ScenarioLabel::High => "high",
            ScenarioLabel::Extreme => "extreme",
        }
    }
}

impl std::str::FromStr for ScenarioLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "base" => Ok(ScenarioLabel::Base),
            "high" => Ok(ScenarioLabel::High),
            "extreme" => Ok(ScenarioLabel::Extreme),
            other => Err(format!("unknown scenario label `{other}`")),
        }
    }
}

/// One trailing-year revenue-per-DAU observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevenuePerDauPoint {
    pub quarter_end: NaiveDate,
    /// Sum of the four quarterly revenues ending at this quarter, USD.
    pub yearly_revenue: f64,
    /// Mean daily DAU over the trailing 365 days.
    pub avg_dau: f64,
    /// `yearly_revenue / avg_dau`, USD per DAU per year.
    pub rev_per_dau: f64,
}

/// Trailing-year revenue per DAU for every quarter with three predecessors.
pub fn trailing_year_rev_per_dau(
    financials: &[QuarterlyFinancials],
    dau: &DailyAggregate,
) -> Result<Vec<RevenuePerDauPoint>, RevenueError> {
    if financials.len() < 4 {
        return Err(RevenueError::TooFewQuarters {
            have: financials.len(),
            need: 4,
        });
    }
    for w in financials.windows(2) {
        if w[1].quarter_end <= w[0].quarter_end {
            return Err(RevenueError::QuartersUnordered(w[1].quarter_end));
        }
    }
    let mut out = Vec::with_capacity(financials.len() - 3);
    for i in 3..financials.len() {
        let yearly_revenue: f64 = financials[i - 3..=i].iter().map(|q| q.revenue).sum();
        let end = financials[i].quarter_end;
        let avg_dau = dau
            .mean_over_window(end, TRAILING_WINDOW_DAYS)
            .ok_or(RevenueError::CoverageGap {
                window_end: end,
                window_days: TRAILING_WINDOW_DAYS,
            })?;
        if avg_dau <= 0.0 {
            return Err(RevenueError::ZeroAverageDau { window_end: end });
        }
        out.push(RevenuePerDauPoint {
            quarter_end: end,
            yearly_revenue,
            avg_dau,
            rev_per_dau: yearly_revenue / avg_dau,
        });
    }
    Ok(out)
}

/// Convert points to (fractional years since the first point, value) pairs.
pub fn points_in_years(points: &[RevenuePerDauPoint]) -> Option<(NaiveDate, Vec<(f64, f64)>)> {
    let origin = points.first()?.quarter_end;
    let pts = points
        .iter()
        .map(|p| {
            (
                (p.quarter_end - origin).num_days() as f64 / 365.25,
                p.rev_per_dau,
            )
        })
        .collect();
    Some((origin, pts))
}

/// Logistic growth parameters for revenue per DAU.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    /// Carrying capacity (saturation ceiling), USD/DAU/year.
    pub ceiling: f64,
    /// Growth rate per year.
    pub growth_rate: f64,
    /// Midpoint in fractional years since the fit origin.
    pub midpoint_years: f64,
}

impl LogisticParams {
    /// `ceiling / (1 + exp(-growth_rate * (t - midpoint)))`; strictly below
    /// the ceiling and strictly increasing in `t` for positive growth.
    pub fn value(&self, t_years: f64) -> f64 {
        self.ceiling / (1.0 + (-self.growth_rate * (t_years - self.midpoint_years)).exp())
    }
}

/// Closed-form logistic projection at `t_years` on the fit's time axis.
pub fn project_rev_per_dau(params: &LogisticParams, t_years: f64) -> f64 {
    params.value(t_years)
}

/// A fitted logistic with its linear-space RMSE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub params: LogisticParams,
    pub rmse: f64,
    /// Set when the data carried no growth signal (already saturated); the
    /// growth rate is pinned at the smallest grid value.
    pub saturated: bool,
}

/// Exponential benchmark `a * exp(b t)` fitted by log-space OLS; the RMSE
/// is reported in linear space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub amplitude: f64,
    pub rate: f64,
    pub rmse: f64,
}

/// Rolling prefix comparison of the two growth models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub records: Vec<PrefixRecord>,
}

/// RMSE of both models over the first `prefix_len` points; `None` marks a
/// fit that failed for that prefix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrefixRecord {
    pub prefix_len: usize,
    pub rmse_logistic: Option<f64>,
    pub rmse_exponential: Option<f64>,
}

const GROWTH_GRID: [f64; 8] = [0.05, 0.1, 0.2, 0.4, 0.8, 1.5, 3.0, 6.0];
const CEILING_FACTORS: [f64; 7] = [1.02, 1.1, 1.3, 1.6, 2.2, 3.0, 5.0];
const MIDPOINT_GRID_POINTS: usize = 11;
const REFINE_STARTS: usize = 3;
const MAX_ITERATIONS: usize = 200;
const STEP_TOLERANCE: f64 = 1e-9;
/// Pushing the midpoint this far left of the data makes the logistic flat
/// at the ceiling over any realistic span.
const SATURATED_MIDPOINT_SHIFT_YEARS: f64 = 1000.0;

fn validate_points(points: &[(f64, f64)], need: usize) -> Result<(), RevenueError> {
    if points.len() < need {
        return Err(RevenueError::TooFewPoints {
            have: points.len(),
            need,
        });
    }
    for &(t, y) in points {
        if !(y > 0.0) || !y.is_finite() {
            return Err(RevenueError::NonPositivePoint { t, value: y });
        }
    }
    let t0 = points[0].0;
    if points.iter().all(|&(t, _)| t == t0) {
        return Err(RevenueError::DegenerateTimeAxis);
    }
    Ok(())
}

fn sse(points: &[(f64, f64)], p: &LogisticParams) -> f64 {
    points
        .iter()
        .map(|&(t, y)| (p.value(t) - y).powi(2))
        .sum()
}

fn rmse_from_sse(sse: f64, n: usize) -> f64 {
    (sse / n as f64).sqrt()
}

/// Solve `A x = b` for a small symmetric system by Gaussian elimination
/// with partial pivoting. `None` when singular.
fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// One damped Gauss-Newton descent. Returns the refined parameters, their
/// SSE, and whether the relative-step criterion was met.
fn gauss_newton(
    points: &[(f64, f64)],
    start: LogisticParams,
    fixed_ceiling: bool,
) -> (LogisticParams, f64, bool) {
    let mut p = start;
    let mut current_sse = sse(points, &p);
    let dim = if fixed_ceiling { 2 } else { 3 };

    for _ in 0..MAX_ITERATIONS {
        // Normal equations J^T J d = -J^T r with the analytic Jacobian of
        // k * s(t), s = 1 / (1 + exp(-g (t - t0))).
        let mut a = vec![vec![0.0_f64; dim]; dim];
        let mut b = vec![0.0_f64; dim];
        for &(t, y) in points {
            let s = 1.0 / (1.0 + (-p.growth_rate * (t - p.midpoint_years)).exp());
            let resid = p.ceiling * s - y;
            let d_g = p.ceiling * s * (1.0 - s) * (t - p.midpoint_years);
            let d_t0 = -p.ceiling * p.growth_rate * s * (1.0 - s);
            let row: [f64; 3] = if fixed_ceiling {
                [d_g, d_t0, 0.0]
            } else {
                [s, d_g, d_t0]
            };
            for i in 0..dim {
                for j in 0..dim {
                    a[i][j] += row[i] * row[j];
                }
                b[i] -= row[i] * resid;
            }
        }
        let Some(step) = solve_small(a, b) else {
            // Singular normal equations: nothing further to refine.
            return (p, current_sse, true);
        };

        // Backtracking damping: halve until the SSE strictly improves and
        // the iterate stays in the positive-parameter region.
        let mut alpha = 1.0_f64;
        let mut accepted = None;
        for _ in 0..30 {
            let candidate = if fixed_ceiling {
                LogisticParams {
                    ceiling: p.ceiling,
                    growth_rate: p.growth_rate + alpha * step[0],
                    midpoint_years: p.midpoint_years + alpha * step[1],
                }
            } else {
                LogisticParams {
                    ceiling: p.ceiling + alpha * step[0],
                    growth_rate: p.growth_rate + alpha * step[1],
                    midpoint_years: p.midpoint_years + alpha * step[2],
                }
            };
            if candidate.ceiling > 0.0 && candidate.growth_rate > 0.0 {
                let candidate_sse = sse(points, &candidate);
                if candidate_sse < current_sse {
                    accepted = Some((candidate, candidate_sse, alpha));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((next, next_sse, used_alpha)) = accepted else {
            // No improving damped step exists; we are at a minimum.
            return (p, current_sse, true);
        };

        let step_norm: f64 = step.iter().map(|d| (used_alpha * d).powi(2)).sum::<f64>().sqrt();
        let param_norm = (p.ceiling.powi(2) + p.growth_rate.powi(2) + p.midpoint_years.powi(2))
            .sqrt()
            .max(1e-12);
        p = next;
        current_sse = next_sse;
        if step_norm / param_norm < STEP_TOLERANCE {
            return (p, current_sse, true);
        }
    }
    (p, current_sse, false)
}

/// Fit `r(t) = ceiling / (1 + exp(-g (t - t0)))` by multi-start coarse grid
/// search followed by damped Gauss-Newton. With `fixed_ceiling` only
/// (g, t0) are free. Saturated inputs (no growth signal left) come back
/// flagged with the growth rate pinned at the smallest grid value.
pub fn fit_logistic(
    points: &[(f64, f64)],
    fixed_ceiling: Option<f64>,
) -> Result<LogisticFit, RevenueError> {
    validate_points(points, 4)?;
    if let Some(k) = fixed_ceiling {
        if !(k > 0.0) {
            return Err(RevenueError::BadCeiling(k));
        }
    }

    let n = points.len();
    let t_first = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let t_last = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let span = t_last - t_first;
    let y_max = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let y_min = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);

    // Saturated input: no usable growth signal, g is unidentifiable.
    let saturated_to = match fixed_ceiling {
        Some(k) => points
            .iter()
            .all(|&(_, y)| (y - k).abs() <= 1e-9 * k.max(1.0))
            .then_some(k),
        None => (y_max - y_min <= 1e-12 * y_max.abs().max(1.0)).then_some(y_max),
    };
    if let Some(k) = saturated_to {
        let params = LogisticParams {
            ceiling: k,
            growth_rate: GROWTH_GRID[0],
            midpoint_years: t_first - SATURATED_MIDPOINT_SHIFT_YEARS,
        };
        return Ok(LogisticFit {
            rmse: rmse_from_sse(sse(points, &params), n),
            params,
            saturated: true,
        });
    }

    let ceilings: Vec<f64> = match fixed_ceiling {
        Some(k) => vec![k],
        None => CEILING_FACTORS.iter().map(|f| f * y_max).collect(),
    };
    let midpoints: Vec<f64> = (0..MIDPOINT_GRID_POINTS)
        .map(|i| {
            let frac = i as f64 / (MIDPOINT_GRID_POINTS - 1) as f64;
            (t_first - span) + frac * 3.0 * span
        })
        .collect();

    let mut grid: Vec<(f64, LogisticParams)> = Vec::new();
    for &ceiling in &ceilings {
        for &growth_rate in &GROWTH_GRID {
            for &midpoint_years in &midpoints {
                let p = LogisticParams {
                    ceiling,
                    growth_rate,
                    midpoint_years,
                };
                grid.push((sse(points, &p), p));
            }
        }
    }
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best: Option<(LogisticParams, f64)> = None;
    let mut best_unconverged_sse = f64::INFINITY;
    for &(_, start) in grid.iter().take(REFINE_STARTS) {
        let (p, fit_sse, converged) = gauss_newton(points, start, fixed_ceiling.is_some());
        if converged {
            if best.as_ref().is_none_or(|(_, s)| fit_sse < *s) {
                best = Some((p, fit_sse));
            }
        } else {
            best_unconverged_sse = best_unconverged_sse.min(fit_sse);
        }
    }
    match best {
        Some((params, fit_sse)) => Ok(LogisticFit {
            params,
            rmse: rmse_from_sse(fit_sse, n),
            saturated: false,
        }),
        None => Err(RevenueError::NonConvergence {
            best_rmse: rmse_from_sse(best_unconverged_sse, n),
        }),
    }
}

/// Fit the three fixed-ceiling scenarios on shared data.
pub fn fit_scenarios(
    points: &[(f64, f64)],
) -> Result<Vec<(ScenarioLabel, LogisticFit)>, RevenueError> {
    ScenarioLabel::ALL
        .iter()
        .map(|&label| Ok((label, fit_logistic(points, Some(label.default_ceiling()))?)))
        .collect()
}

/// Log-space OLS fit of `a * exp(b t)`; RMSE reported in linear space.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<ExponentialFit, RevenueError> {
    validate_points(points, 2)?;
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_ln = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let stt: f64 = points.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    let sty: f64 = points
        .iter()
        .map(|p| (p.0 - mean_t) * (p.1.ln() - mean_ln))
        .sum();
    let rate = sty / stt;
    let amplitude = (mean_ln - rate * mean_t).exp();
    let sse: f64 = points
        .iter()
        .map(|&(t, y)| (amplitude * (rate * t).exp() - y).powi(2))
        .sum();
    Ok(ExponentialFit {
        amplitude,
        rate,
        rmse: rmse_from_sse(sse, points.len()),
    })
}

/// Fit both models on every prefix of at least four points. Per-prefix fit
/// failures are recorded as `None` rather than aborting the sweep.
pub fn rolling_model_comparison(points: &[(f64, f64)]) -> Result<ModelComparison, RevenueError> {
    validate_points(points, 5)?;
    let records = (4..=points.len())
        .map(|prefix_len| {
            let prefix = &points[..prefix_len];
            PrefixRecord {
                prefix_len,
                rmse_logistic: fit_logistic(prefix, None).ok().map(|f| f.rmse),
                rmse_exponential: fit_exponential(prefix).ok().map(|f| f.rmse),
            }
        })
        .collect();
    Ok(ModelComparison { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use chrono::NaiveDate;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn quarter(end: &str, revenue: f64) -> QuarterlyFinancials {
        QuarterlyFinancials {
            quarter_end: date(end),
            revenue,
            net_income: 0.0,
        }
    }

    fn flat_dau(start: &str, days: usize, level: f64) -> DailyAggregate {
        DailyAggregate {
            start_day: date(start),
            values: vec![level; days],
        }
    }

    fn logistic_points(k: f64, g: f64, t0: f64, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let t = i as f64 * 0.25;
                (t, k / (1.0 + (-g * (t - t0)).exp()))
            })
            .collect()
    }

    #[test]
    fn single_trailing_point_arithmetic() {
        let financials = vec![
            quarter("2010-03-31", 10e6),
            quarter("2010-06-30", 20e6),
            quarter("2010-09-30", 30e6),
            quarter("2010-12-31", 40e6),
        ];
        let dau = flat_dau("2009-06-01", 700, 1e6);
        let points = trailing_year_rev_per_dau(&financials, &dau).unwrap();
        assert_eq!(points.len(), 1);
        assert_relative_eq!(points[0].rev_per_dau, 100.0);
        assert_relative_eq!(points[0].yearly_revenue, 100e6);
    }

    #[test]
    fn fiscal_2010_total_reproduced_from_quarter_splits() {
        let financials = vec![
            quarter("2010-03-31", 100.93e6),
            quarter("2010-06-30", 130.10e6),
            quarter("2010-09-30", 170.71e6),
            quarter("2010-12-31", 195.72e6),
        ];
        let dau = flat_dau("2009-06-01", 700, 2e6);
        let points = trailing_year_rev_per_dau(&financials, &dau).unwrap();
        assert_relative_eq!(points[0].yearly_revenue, 597.46e6, max_relative = 1e-12);
    }

    #[test]
    fn stationary_quarters_give_constant_ratio() {
        let ends = [
            "2010-03-31",
            "2010-06-30",
            "2010-09-30",
            "2010-12-31",
            "2011-03-31",
            "2011-06-30",
            "2011-09-30",
            "2011-12-31",
        ];
        let financials: Vec<_> = ends.iter().map(|e| quarter(e, 25e6)).collect();
        let dau = flat_dau("2009-01-01", 1200, 2e6);
        let points = trailing_year_rev_per_dau(&financials, &dau).unwrap();
        assert_eq!(points.len(), 5);
        for p in points {
            assert_relative_eq!(p.rev_per_dau, 50.0);
        }
    }

    #[test]
    fn coverage_gap_is_an_error() {
        let financials = vec![
            quarter("2010-03-31", 10e6),
            quarter("2010-06-30", 20e6),
            quarter("2010-09-30", 30e6),
            quarter("2010-12-31", 40e6),
        ];
        let dau = flat_dau("2010-06-01", 400, 1e6); // starts after window start
        assert!(matches!(
            trailing_year_rev_per_dau(&financials, &dau),
            Err(RevenueError::CoverageGap { .. })
        ));
    }

    #[test]
    fn trailing_points_invariant_under_quarter_resplit() {
        // Splitting the same yearly totals differently across quarters
        // leaves every four-quarter running sum at the same dates intact.
        let a = vec![
            quarter("2010-03-31", 40e6),
            quarter("2010-06-30", 60e6),
            quarter("2010-09-30", 80e6),
            quarter("2010-12-31", 100e6),
            quarter("2011-03-31", 120e6),
            quarter("2011-06-30", 140e6),
            quarter("2011-09-30", 160e6),
            quarter("2011-12-31", 180e6),
        ];
        let dau = flat_dau("2009-01-01", 1200, 1e6);
        let p_a = trailing_year_rev_per_dau(&a, &dau).unwrap();
        let last_a = p_a.last().unwrap();
        // 2011 sums to 600e6 in both splits
        let b = vec![
            quarter("2010-03-31", 40e6),
            quarter("2010-06-30", 60e6),
            quarter("2010-09-30", 80e6),
            quarter("2010-12-31", 100e6),
            quarter("2011-03-31", 150e6),
            quarter("2011-06-30", 150e6),
            quarter("2011-09-30", 150e6),
            quarter("2011-12-31", 150e6),
        ];
        let p_b = trailing_year_rev_per_dau(&b, &dau).unwrap();
        let last_b = p_b.last().unwrap();
        assert_relative_eq!(last_a.rev_per_dau, last_b.rev_per_dau, max_relative = 1e-12);
    }

    #[test]
    fn logistic_recovery_on_noiseless_points() {
        let points = logistic_points(30.0, 1.5, 2.0, 12);
        let fit = fit_logistic(&points, None).unwrap();
        assert!(
            (fit.params.ceiling - 30.0).abs() / 30.0 < 0.01,
            "ceiling {}",
            fit.params.ceiling
        );
        assert!((fit.params.growth_rate - 1.5).abs() / 1.5 < 0.01);
        assert!((fit.params.midpoint_years - 2.0).abs() / 2.0 < 0.01);
    }

    #[test]
    fn saturated_points_flagged_with_minimum_growth() {
        let points: Vec<(f64, f64)> = (0..6).map(|i| (i as f64 * 0.25, 30.0)).collect();
        let fit = fit_logistic(&points, Some(30.0)).unwrap();
        assert!(fit.saturated);
        assert_eq!(fit.params.growth_rate, GROWTH_GRID[0]);
        assert!(fit.rmse < 1e-9);
    }

    #[test]
    fn early_regime_exponential_approximates_logistic() {
        // Points at r <= 0.1 * ceiling: the two model families are nearly
        // indistinguishable, so their RMSEs differ by far less than 5% of
        // the data scale.
        let points = logistic_points(30.0, 1.2, 6.0, 12);
        assert!(points.iter().all(|&(_, y)| y <= 3.0));
        let exp_fit = fit_exponential(&points).unwrap();
        let log_fit = fit_logistic(&points, None).unwrap();
        let scale = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
        assert!(
            (exp_fit.rmse - log_fit.rmse).abs() <= 0.05 * scale,
            "exp {}, logistic {}, scale {}",
            exp_fit.rmse,
            log_fit.rmse,
            scale
        );
    }

    #[test]
    fn exponential_rate_matches_small_value_growth() {
        let g = 1.2;
        let points = logistic_points(30.0, g, 6.0, 12);
        let fit = fit_exponential(&points).unwrap();
        assert!(
            (fit.rate - g).abs() / g < 0.10,
            "recovered rate {}",
            fit.rate
        );
    }

    #[test]
    fn rolling_on_pure_exponential_is_machine_exact() {
        let points: Vec<(f64, f64)> = (0..10)
            .map(|i| {
                let t = i as f64 * 0.25;
                (t, 2.0 * (0.8 * t).exp())
            })
            .collect();
        let cmp = rolling_model_comparison(&points).unwrap();
        assert_eq!(cmp.records.len(), 7);
        for rec in &cmp.records {
            assert!(rec.rmse_exponential.unwrap() < 1e-6);
        }
    }

    #[test]
    fn rolling_prefers_logistic_deep_into_saturation() {
        let points = logistic_points(30.0, 1.5, 1.0, 16); // last t = 3.75, well past t0
        let cmp = rolling_model_comparison(&points).unwrap();
        let last = cmp.records.last().unwrap();
        let (log_rmse, exp_rmse) = (
            last.rmse_logistic.expect("logistic fit"),
            last.rmse_exponential.expect("exponential fit"),
        );
        assert!(
            log_rmse < exp_rmse,
            "logistic {log_rmse} vs exponential {exp_rmse}"
        );
    }

    #[test]
    fn rolling_record_count() {
        let points: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, (i + 1) as f64)).collect();
        let cmp = rolling_model_comparison(&points).unwrap();
        let lens: Vec<usize> = cmp.records.iter().map(|r| r.prefix_len).collect();
        assert_eq!(lens, vec![4, 5]);
    }

    #[test]
    fn projection_midpoint_and_asymptote() {
        let p = LogisticParams {
            ceiling: 30.0,
            growth_rate: 1.5,
            midpoint_years: 2.0,
        };
        assert_relative_eq!(project_rev_per_dau(&p, 2.0), 15.0, epsilon = 1e-12);
        let far = project_rev_per_dau(&p, 12.0);
        assert!(far < 30.0);
        assert!((30.0 - far) < 1e-6 * 30.0);
    }

    #[test]
    fn three_ceilings_reached_in_far_future() {
        let points = logistic_points(30.0, 1.5, 2.0, 12);
        let fits = fit_scenarios(&points).unwrap();
        let far_t = 80.0;
        let values: Vec<f64> = fits
            .iter()
            .map(|(_, f)| project_rev_per_dau(&f.params, far_t))
            .collect();
        for ((label, _), v) in fits.iter().zip(&values) {
            let k = label.default_ceiling();
            assert!((k - v).abs() < 1e-6 * k, "{label:?}: {v} vs {k}");
        }
        assert!(values[0] < values[1] && values[1] < values[2]);
    }

    #[test]
    fn scenario_fits_ordered_pointwise_beyond_data() {
        let points = logistic_points(28.0, 1.0, 2.5, 10);
        let fits = fit_scenarios(&points).unwrap();
        let t_last = points.last().unwrap().0;
        for step in 1..200 {
            let t = t_last + step as f64 * 0.25;
            let vals: Vec<f64> = fits
                .iter()
                .map(|(_, f)| project_rev_per_dau(&f.params, t))
                .collect();
            assert!(vals[0] <= vals[1] + 1e-12 && vals[1] <= vals[2] + 1e-12, "t = {t}");
        }
    }

    #[test]
    fn projection_strictly_increasing_and_bounded() {
        let p = LogisticParams {
            ceiling: 43.0,
            growth_rate: 0.9,
            midpoint_years: 1.0,
        };
        // strict monotonicity holds while exp(-g (t - t0)) stays
        // representable; past ~36/g years the value rounds onto the ceiling
        let mut prev = 0.0;
        for i in 0..140 {
            let t = -10.0 + i as f64 * 0.25;
            let v = p.value(t);
            assert!(v > prev, "t = {t}");
            assert!(v < p.ceiling);
            prev = v;
        }
    }

    #[test]
    fn too_few_points_rejected() {
        let points = vec![(0.0, 1.0), (0.25, 2.0), (0.5, 3.0)];
        assert!(matches!(
            fit_logistic(&points, None),
            Err(RevenueError::TooFewPoints { .. })
        ));
    }
}
