//! Power-law decay tails for per-game DAU curves.
//!
//! Each game's functional form is its observed history followed by a
//! power-law tail `f(t) ~ (t - t_min + 1)^-gamma` fitted by ordinary least
//! squares in log-log space and rescaled to pass exactly through the last
//! observed value, so the data/forecast junction is continuous.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeseries::DauSeries;

/// Minimum release-aligned series length for tail selection.
pub const MIN_SERIES_LEN: usize = 8;
/// Minimum number of positive points needed by the log-log fit.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Error)]
pub enum DecayError {
    #[error("series has {len} usable points, need at least {min}; treat the game as flat-tail")]
    TooShort { len: usize, min: usize },
    #[error("only {have} strictly positive points in the fit window, need {need}")]
    TooFewPositive { have: usize, need: usize },
    #[error("t_min {t_min} out of range for a series of length {len}")]
    TMinOutOfRange { t_min: usize, len: usize },
    #[error("series has no positive observation; no curve can be built")]
    NoRelease,
}

/// Fitted tail: `dau(t) ~ scale * (t - t_min + 1)^-gamma` for days at or
/// after `t_min` (day offsets from the game's release).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailParams {
    /// Power-law exponent, >= 0 (0 means a flat tail).
    pub gamma: f64,
    /// Level of the fitted power law in DAU units.
    pub scale: f64,
    /// Day offset (from release) where the tail regime begins.
    pub t_min: usize,
    /// Root-mean-square residual of the fit in log space.
    pub fit_rmse: f64,
    /// Set when the unconstrained slope was positive (game still growing)
    /// and gamma was clamped to zero.
    pub clamped: bool,
}

impl TailParams {
    /// A flat tail at `level` DAU.
    pub fn flat(level: f64) -> Self {
        Self {
            gamma: 0.0,
            scale: level,
            t_min: 0,
            fit_rmse: 0.0,
            clamped: false,
        }
    }
}

/// Result of the log-log least-squares fit over real-valued points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub gamma: f64,
    pub scale: f64,
    pub log_rmse: f64,
    pub clamped: bool,
}

/// Least-squares fit of `log(dau)` against `log(t - t_min + 1)` over points
/// `(t, dau)` with `t >= t_min`. Points with `dau <= 0` are dropped (their
/// log is undefined); at least [`MIN_FIT_POINTS`] must remain. A positive
/// slope (still-growing input) is clamped to a flat fit and flagged.
pub fn fit_power_law(points: &[(f64, f64)], t_min: f64) -> Result<PowerLawFit, DecayError> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(t, dau)| t >= t_min && dau > 0.0)
        .map(|&(t, dau)| ((t - t_min + 1.0).ln(), dau.ln()))
        .collect();
    if logs.len() < MIN_FIT_POINTS {
        return Err(DecayError::TooFewPositive {
            have: logs.len(),
            need: MIN_FIT_POINTS,
        });
    }

    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    // All x equal can only happen with duplicated t values; treat as flat.
    let mut slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    // A fitted rise over the window below numerical noise is a flat series
    // (constant input leaves rounding residue of order 1e-30 in sxy).
    let x_range = logs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max)
        - logs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    if slope.abs() * x_range <= 1e-12 * (1.0 + mean_y.abs()) {
        slope = 0.0;
    }

    let (gamma, intercept, clamped) = if slope > 0.0 {
        // Still growing at data end: flat tail, intercept refit with the
        // slope pinned at zero.
        (0.0, mean_y, true)
    } else {
        ((-slope).abs(), mean_y - slope * mean_x, false)
    };
    let fitted_slope = -gamma;
    let sse: f64 = logs
        .iter()
        .map(|&(x, y)| (y - (intercept + fitted_slope * x)).powi(2))
        .sum();
    Ok(PowerLawFit {
        gamma,
        scale: intercept.exp(),
        log_rmse: (sse / n).sqrt(),
        clamped,
    })
}

/// Day offset (from release) where the tail regime begins: the first peak
/// day, pulled earlier if needed so at least [`MIN_FIT_POINTS`] points
/// remain at or after it.
pub fn select_t_min(series: &DauSeries) -> Result<usize, DecayError> {
    let aligned = series.release_aligned().ok_or(DecayError::NoRelease)?;
    if aligned.len() < MIN_SERIES_LEN {
        return Err(DecayError::TooShort {
            len: aligned.len(),
            min: MIN_SERIES_LEN,
        });
    }
    let peak = aligned
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("non-empty");
    Ok(peak.min(aligned.len() - MIN_FIT_POINTS))
}

/// Fit the power-law tail of one game from `t_min` (release-aligned day
/// offset) onward.
pub fn fit_power_law_tail(series: &DauSeries, t_min: usize) -> Result<TailParams, DecayError> {
    let aligned = series.release_aligned().ok_or(DecayError::NoRelease)?;
    if t_min >= aligned.len() {
        return Err(DecayError::TMinOutOfRange {
            t_min,
            len: aligned.len(),
        });
    }
    let points: Vec<(f64, f64)> = aligned
        .iter()
        .enumerate()
        .skip(t_min)
        .map(|(k, &v)| (k as f64, v as f64))
        .collect();
    let fit = fit_power_law(&points, t_min as f64)?;
    Ok(TailParams {
        gamma: fit.gamma,
        scale: fit.scale,
        t_min,
        fit_rmse: fit.log_rmse,
        clamped: fit.clamped,
    })
}

/// One game's full functional form: observed values from its release day
/// plus the fitted tail, anchored to the last observed value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameCurve {
    game_id: String,
    observed: Vec<f64>,
    tail: TailParams,
    anchor: f64,
}

impl GameCurve {
    /// Build from release-aligned observed values and a fitted tail.
    pub fn new(
        game_id: impl Into<String>,
        observed: Vec<f64>,
        tail: TailParams,
    ) -> Result<Self, DecayError> {
        if observed.is_empty() {
            return Err(DecayError::NoRelease);
        }
        if tail.t_min >= observed.len() {
            return Err(DecayError::TMinOutOfRange {
                t_min: tail.t_min,
                len: observed.len(),
            });
        }
        let anchor = *observed.last().expect("non-empty");
        Ok(Self {
            game_id: game_id.into(),
            observed,
            tail,
            anchor,
        })
    }

    /// A curve that holds its last observed value forever (gamma = 0).
    pub fn flat(game_id: impl Into<String>, observed: Vec<f64>) -> Result<Self, DecayError> {
        let level = observed.last().copied().unwrap_or(0.0);
        Self::new(game_id, observed, TailParams::flat(level))
    }

    /// Select `t_min`, fit the tail, and assemble the curve.
    pub fn from_series(series: &DauSeries) -> Result<Self, DecayError> {
        let t_min = select_t_min(series)?;
        Self::from_series_with_t_min(series, t_min)
    }

    /// Same as [`GameCurve::from_series`] with a caller-chosen `t_min`
    /// (per-game configuration override).
    pub fn from_series_with_t_min(series: &DauSeries, t_min: usize) -> Result<Self, DecayError> {
        let tail = fit_power_law_tail(series, t_min)?;
        let aligned = series.release_aligned().ok_or(DecayError::NoRelease)?;
        let observed = aligned.iter().map(|&v| v as f64).collect();
        Self::new(series.game_id(), observed, tail)
    }

    pub fn game_id(&self) -> &str {
        &self.game_id
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    pub fn observed_len(&self) -> usize {
        self.observed.len()
    }

    /// DAU on the last observed day; the tail passes through it exactly.
    pub fn anchor_dau(&self) -> f64 {
        self.anchor
    }

    pub fn tail(&self) -> &TailParams {
        &self.tail
    }

    /// DAU at day offset `t` from the game's release: the observed value
    /// inside the data, the rescaled power-law tail beyond it.
    pub fn evaluate(&self, t: u64) -> f64 {
        let n = self.observed.len() as u64;
        if t < n {
            return self.observed[t as usize];
        }
        if self.tail.gamma == 0.0 {
            return self.anchor;
        }
        let t_end = (n - 1) as f64;
        let t_min = self.tail.t_min as f64;
        let ratio = (t_end - t_min + 1.0) / (t as f64 - t_min + 1.0);
        self.anchor * ratio.powf(self.tail.gamma)
    }

    /// The curve evaluated on days `0..len`.
    pub fn sample(&self, len: usize) -> Vec<f64> {
        (0..len as u64).map(|t| self.evaluate(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use chrono::NaiveDate;

    fn series(values: Vec<u64>) -> DauSeries {
        DauSeries::new("g", NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(), values).unwrap()
    }

    #[test]
    fn t_min_is_zero_for_monotone_decreasing() {
        let s = series((0..20).map(|i| 1000 - i * 10).collect());
        assert_eq!(select_t_min(&s).unwrap(), 0);
    }

    #[test]
    fn t_min_at_peak_after_rise() {
        let mut v: Vec<u64> = (0..=10).map(|i| 100 + i * 50).collect(); // peak at day 10
        v.extend((1..=20).map(|i| 600 - i * 20));
        let s = series(v);
        assert_eq!(select_t_min(&s).unwrap(), 10);
    }

    #[test]
    fn t_min_clamped_to_keep_four_points() {
        let l = 12;
        let mut v = vec![50_u64; l - 2];
        v.push(999); // peak at day L-2
        v.push(40);
        let s = series(v);
        assert_eq!(select_t_min(&s).unwrap(), l - 4);
    }

    #[test]
    fn short_series_asks_for_flat_tail() {
        let s = series(vec![5, 4, 3, 2, 1]);
        assert!(matches!(
            select_t_min(&s),
            Err(DecayError::TooShort { .. })
        ));
    }

    #[test]
    fn recovers_synthetic_exponent_on_rounded_counts() {
        // dau(t) = round(10000 * (t+1)^-1.2), t = 0..99
        let v: Vec<u64> = (0..100)
            .map(|t| (10_000.0 * ((t + 1) as f64).powf(-1.2)).round() as u64)
            .collect();
        let s = series(v);
        let fit = fit_power_law_tail(&s, 0).unwrap();

        // Independent oracle: closed-form OLS over the same log-log points.
        let pts: Vec<(f64, f64)> = s
            .values()
            .iter()
            .enumerate()
            .map(|(t, &v)| (((t + 1) as f64).ln(), (v as f64).ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();

        assert_relative_eq!(fit.gamma, -slope, epsilon = 1e-12);
        assert!((fit.gamma - 1.2).abs() < 0.05, "gamma = {}", fit.gamma);
    }

    #[test]
    fn constant_series_fits_flat_unclamped() {
        let s = series(vec![500; 30]);
        let fit = fit_power_law_tail(&s, 0).unwrap();
        assert_eq!(fit.gamma, 0.0);
        assert!(!fit.clamped);
        assert_relative_eq!(fit.scale, 500.0, epsilon = 1e-9);
        assert!(fit.fit_rmse < 1e-12);
    }

    #[test]
    fn two_distinct_points_reproduce_exact_exponent() {
        // Two points exactly on dau = 1000 * x^-0.7 (x = t+1), each doubled.
        // OLS over two distinct x values passes through both exactly, so the
        // slope equals the hand-computed two-point fit.
        let x1 = 1.0_f64;
        let x2 = 10.0_f64;
        let y = |x: f64| 1000.0 * x.powf(-0.7);
        let points = vec![
            (x1 - 1.0, y(x1)),
            (x1 - 1.0, y(x1)),
            (x2 - 1.0, y(x2)),
            (x2 - 1.0, y(x2)),
        ];
        let fit = fit_power_law(&points, 0.0).unwrap();
        let hand_slope = (y(x2).ln() - y(x1).ln()) / (x2.ln() - x1.ln());
        assert_relative_eq!(fit.gamma, -hand_slope, epsilon = 1e-12);
        assert_relative_eq!(fit.gamma, 0.7, epsilon = 1e-12);
        assert!(fit.log_rmse < 1e-12);
    }

    #[test]
    fn growing_series_clamps_to_flat_and_flags() {
        let s = series((1..=20).map(|i| i * 100).collect());
        let fit = fit_power_law_tail(&s, 0).unwrap();
        assert_eq!(fit.gamma, 0.0);
        assert!(fit.clamped);
    }

    #[test]
    fn zero_points_are_dropped_and_scarcity_errors() {
        let s = series(vec![9, 0, 0, 0, 0, 0, 8, 7]);
        let err = fit_power_law_tail(&s, 0).unwrap_err();
        assert!(matches!(err, DecayError::TooFewPositive { have: 3, .. }));
    }

    #[test]
    fn evaluate_echoes_observed_and_anchors_tail() {
        let v: Vec<u64> = (0..40).map(|t| 2000 - t * 31).collect();
        let s = series(v.clone());
        let curve = GameCurve::from_series(&s).unwrap();
        for (t, &obs) in v.iter().enumerate() {
            assert_eq!(curve.evaluate(t as u64), obs as f64);
        }
        assert_eq!(curve.evaluate(39), curve.anchor_dau());
    }

    #[test]
    fn flat_curve_holds_anchor_forever() {
        let curve = GameCurve::flat("g", vec![100.0, 90.0, 80.0]).unwrap();
        assert_eq!(curve.evaluate(2), 80.0);
        assert_eq!(curve.evaluate(1_000_000), 80.0);
    }

    #[test]
    fn unit_gamma_halves_at_double_tail_time() {
        // gamma = 1: value at t with (t - t_min + 1) = 2*(t_end - t_min + 1)
        // must be anchor / 2. Cross-check against the ratio formula computed
        // independently.
        let observed: Vec<f64> = (0..10).map(|t| 1000.0 / (t + 1) as f64).collect();
        let tail = TailParams {
            gamma: 1.0,
            scale: 1000.0,
            t_min: 0,
            fit_rmse: 0.0,
            clamped: false,
        };
        let curve = GameCurve::new("g", observed, tail).unwrap();
        let t_end = 9.0_f64;
        let t = 19_u64; // t - t_min + 1 = 20 = 2 * 10
        let expected = curve.anchor_dau() * (t_end - 0.0 + 1.0) / (t as f64 - 0.0 + 1.0);
        assert_relative_eq!(curve.evaluate(t), expected, epsilon = 1e-12);
        assert_relative_eq!(curve.evaluate(t), curve.anchor_dau() / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn noiseless_power_law_has_tiny_log_rmse() {
        for &gamma in &[0.5, 1.0, 1.2, 2.0] {
            let points: Vec<(f64, f64)> = (0..100)
                .map(|t| (t as f64, 10_000.0 * ((t + 1) as f64).powf(-gamma)))
                .collect();
            let fit = fit_power_law(&points, 0.0).unwrap();
            assert!((fit.gamma - gamma).abs() < 1e-9);
            assert!(fit.log_rmse < 1e-6, "rmse = {}", fit.log_rmse);
        }
    }

    #[test]
    fn fit_invariant_under_uniform_scaling() {
        let base: Vec<(f64, f64)> = (0..50)
            .map(|t| (t as f64, 5_000.0 * ((t + 1) as f64).powf(-0.8)))
            .collect();
        let scaled: Vec<(f64, f64)> = base.iter().map(|&(t, y)| (t, 3.5 * y)).collect();
        let f1 = fit_power_law(&base, 0.0).unwrap();
        let f2 = fit_power_law(&scaled, 0.0).unwrap();
        assert_relative_eq!(f1.gamma, f2.gamma, epsilon = 1e-12);
        assert_relative_eq!(f2.scale, 3.5 * f1.scale, max_relative = 1e-12);
    }
}
