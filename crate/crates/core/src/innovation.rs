//! Release-rate estimation and the three Poisson diagnostics: rate
//! constancy (counting process), inter-event independence (autocorrelation
//! with a +/- 2/sqrt(N) band), and exponential inter-event times (Q-Q).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InnovationError {
    #[error("need at least {need} distinct event days, got {have}")]
    TooFewEvents { have: usize, need: usize },
    #[error("need at least {need} inter-event gaps for max_lag {max_lag}, got {have}")]
    SampleTooSmall {
        have: usize,
        need: usize,
        max_lag: usize,
    },
    #[error("inter-event sample has zero variance; autocorrelation is undefined")]
    ZeroVariance,
    #[error("lag {lag} window has zero variance; autocorrelation is undefined")]
    DegenerateLag { lag: usize },
    #[error("inter-event gaps must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("need at least {need} gaps for the Q-Q construction, got {have}")]
    QqTooSmall { have: usize, need: usize },
}

/// Homogeneous-Poisson rate estimate over an event log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonFit {
    /// Events per day: (n - 1) / (last - first), the inter-event MLE.
    pub lambda: f64,
    /// Distinct event days.
    pub n_events: usize,
    /// Days between the first and last event.
    pub span_days: f64,
}

/// Positive day gaps between consecutive events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterEventSample {
    deltas: Vec<f64>,
}

impl InterEventSample {
    /// Build from an event-day log. Same-day events are merged into one;
    /// the number of merged duplicates is returned alongside.
    pub fn from_event_days(days: &[f64]) -> Result<(Self, usize), InnovationError> {
        let (events, merged) = normalize_event_days(days);
        if events.len() < 2 {
            return Err(InnovationError::TooFewEvents {
                have: events.len(),
                need: 2,
            });
        }
        let deltas = events.windows(2).map(|w| w[1] - w[0]).collect();
        Ok((Self { deltas }, merged))
    }

    /// Build directly from gaps; all must be strictly positive.
    pub fn from_deltas(deltas: Vec<f64>) -> Result<Self, InnovationError> {
        if let Some(&bad) = deltas.iter().find(|&&d| !(d > 0.0)) {
            return Err(InnovationError::NonPositiveDelta(bad));
        }
        Ok(Self { deltas })
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.deltas.iter().sum::<f64>() / self.deltas.len() as f64
    }
}

/// Sort and deduplicate an event-day log; returns the merged-event count.
pub fn normalize_event_days(days: &[f64]) -> (Vec<f64>, usize) {
    let mut sorted: Vec<f64> = days.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let before = sorted.len();
    sorted.dedup();
    let merged = before - sorted.len();
    (sorted, merged)
}

/// Maximum-likelihood Poisson rate from an event log: the inter-event MLE
/// `(n - 1) / span`, consistent with the Q-Q fit's `1 / mean(gaps)`.
pub fn estimate_rate(event_days: &[f64]) -> Result<PoissonFit, InnovationError> {
    let (events, _) = normalize_event_days(event_days);
    if events.len() < 2 {
        return Err(InnovationError::TooFewEvents {
            have: events.len(),
            need: 2,
        });
    }
    let span = events[events.len() - 1] - events[0];
    Ok(PoissonFit {
        lambda: (events.len() - 1) as f64 / span,
        n_events: events.len(),
        span_days: span,
    })
}

/// One point of the counting-process diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingPoint {
    /// Days since the first event.
    pub day: f64,
    /// Events observed up to and including this day.
    pub cumulative: usize,
    /// The theoretical line `lambda * day`.
    pub expected: f64,
}

/// Counting process versus the constant-rate line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingDiagnostic {
    pub pairs: Vec<CountingPoint>,
    /// max over events of |(cumulative - 1) - lambda * day|, normalized by
    /// (n - 1). Advisory only; the paper-style check is visual.
    pub max_rel_gap: f64,
}

/// Autocorrelation of the gaps with the white-noise confidence band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrDiagnostic {
    /// `correlations[tau]` is C(tau); C(0) = 1 exactly.
    pub correlations: Vec<f64>,
    /// 2 / sqrt(N), N = number of gaps.
    pub ci_halfwidth: f64,
    /// True when |C(tau)| <= ci_halfwidth for every lag >= 1. Note that for
    /// white noise each lag individually clears a 95% band, so the joint
    /// verdict over many lags fails with substantial probability even for
    /// a true Poisson stream.
    pub cannot_reject: bool,
}

/// Empirical CDF point with the fitted-exponential overlay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub delta: f64,
    pub empirical: f64,
    pub fitted: f64,
}

/// Q-Q comparison of the gaps against the fitted exponential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqDiagnostic {
    /// 1 / mean(gaps).
    pub lambda_hat: f64,
    /// (theoretical quantile, empirical quantile) at Hazen positions
    /// (i - 0.5) / N, both axes in days.
    pub pairs: Vec<(f64, f64)>,
    /// Empirical CDF of the gaps with the fitted exponential CDF.
    pub cdf: Vec<CdfPoint>,
    /// max |empirical - theoretical| over the pairs, in days. Dominated by
    /// the extreme order statistics, whose scatter is of the order of the
    /// mean even for exponential data.
    pub max_abs_gap: f64,
    /// `max_abs_gap` as a fraction of the mean gap.
    pub max_gap_frac_of_mean: f64,
    /// Two-sided max |empirical CDF - fitted CDF| (Kolmogorov-Smirnov
    /// style, in probability units). Advisory; no hard pass/fail.
    pub max_cdf_gap: f64,
}

/// All Poisson diagnostics for one event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub fit: PoissonFit,
    /// Same-day events merged before estimation.
    pub merged_events: usize,
    pub counting: CountingDiagnostic,
    pub autocorr: AutocorrDiagnostic,
    pub qq: QqDiagnostic,
}

/// Counting pairs over `[first, last]` for a normalized event log.
fn counting_diagnostic(events: &[f64], fit: &PoissonFit) -> CountingDiagnostic {
    let t0 = events[0];
    let pairs: Vec<CountingPoint> = events
        .iter()
        .enumerate()
        .map(|(i, &t)| CountingPoint {
            day: t - t0,
            cumulative: i + 1,
            expected: fit.lambda * (t - t0),
        })
        .collect();
    let denom = (fit.n_events - 1).max(1) as f64;
    let max_rel_gap = pairs
        .iter()
        .map(|p| ((p.cumulative as f64 - 1.0) - p.expected).abs())
        .fold(0.0, f64::max)
        / denom;
    CountingDiagnostic { pairs, max_rel_gap }
}

/// Sample autocorrelation of the gaps at lags `0..=max_lag`, computed as
/// the Pearson correlation over the overlapping lag-tau pairs.
pub fn autocorrelation(
    sample: &InterEventSample,
    max_lag: usize,
) -> Result<AutocorrDiagnostic, InnovationError> {
    let d = sample.deltas();
    let n = d.len();
    if n < max_lag + 2 {
        return Err(InnovationError::SampleTooSmall {
            have: n,
            need: max_lag + 2,
            max_lag,
        });
    }
    if variance(d) == 0.0 {
        return Err(InnovationError::ZeroVariance);
    }

    let mut correlations = Vec::with_capacity(max_lag + 1);
    correlations.push(1.0);
    for tau in 1..=max_lag {
        let x = &d[..n - tau];
        let y = &d[tau..];
        let r = pearson(x, y).ok_or(InnovationError::DegenerateLag { lag: tau })?;
        correlations.push(r);
    }
    let ci_halfwidth = 2.0 / (n as f64).sqrt();
    let cannot_reject = correlations[1..].iter().all(|c| c.abs() <= ci_halfwidth);
    Ok(AutocorrDiagnostic {
        correlations,
        ci_halfwidth,
        cannot_reject,
    })
}

/// Q-Q pairs of the gaps against an exponential with the MLE rate
/// `1 / mean(gaps)`, plus the CDF overlay.
pub fn qq_exponential(sample: &InterEventSample) -> Result<QqDiagnostic, InnovationError> {
    let n = sample.len();
    if n < 4 {
        return Err(InnovationError::QqTooSmall { have: n, need: 4 });
    }
    let mean = sample.mean();
    let lambda_hat = 1.0 / mean;
    let mut sorted = sample.deltas().to_vec();
    sorted.sort_unstable_by(f64::total_cmp);

    let nf = n as f64;
    let mut pairs = Vec::with_capacity(n);
    let mut cdf = Vec::with_capacity(n);
    let mut max_abs_gap = 0.0_f64;
    let mut max_cdf_gap = 0.0_f64;
    for (i, &emp) in sorted.iter().enumerate() {
        let p = (i as f64 + 0.5) / nf;
        let theo = -(1.0 - p).ln() / lambda_hat;
        max_abs_gap = max_abs_gap.max((emp - theo).abs());
        let fitted = 1.0 - (-lambda_hat * emp).exp();
        let ecdf_hi = (i as f64 + 1.0) / nf;
        let ecdf_lo = i as f64 / nf;
        max_cdf_gap = max_cdf_gap
            .max((fitted - ecdf_hi).abs())
            .max((fitted - ecdf_lo).abs());
        pairs.push((theo, emp));
        cdf.push(CdfPoint {
            delta: emp,
            empirical: ecdf_hi,
            fitted,
        });
    }
    Ok(QqDiagnostic {
        lambda_hat,
        pairs,
        cdf,
        max_abs_gap,
        max_gap_frac_of_mean: max_abs_gap / mean,
        max_cdf_gap,
    })
}

/// A lag needs at least this many overlapping pairs before its Pearson
/// estimate says anything (a 2-pair window is always +/-1).
pub const MIN_LAG_WINDOW: usize = 10;

/// Run rate estimation and all three diagnostics on an event-day log.
///
/// `max_lag` is clamped so every tested lag keeps at least
/// [`MIN_LAG_WINDOW`] overlapping pairs (falling back to the bare
/// `len - 2` precondition for very small samples).
pub fn diagnose(event_days: &[f64], max_lag: usize) -> Result<DiagnosticsReport, InnovationError> {
    let fit = estimate_rate(event_days)?;
    let (events, merged) = normalize_event_days(event_days);
    let (sample, _) = InterEventSample::from_event_days(event_days)?;
    let counting = counting_diagnostic(&events, &fit);
    let by_window = sample.len().saturating_sub(MIN_LAG_WINDOW);
    let cap = if by_window >= 1 {
        by_window
    } else {
        sample.len().saturating_sub(2)
    };
    let autocorr = autocorrelation(&sample, max_lag.min(cap))?;
    let qq = qq_exponential(&sample)?;
    Ok(DiagnosticsReport {
        fit,
        merged_events: merged,
        counting,
        autocorr,
        qq,
    })
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// Pearson correlation; `None` when either side has zero variance.
fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
