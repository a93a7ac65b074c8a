//! Forecasts an aggregate daily-active-user base by seeded Monte Carlo over
//! per-game decay curves driven by a Poisson innovation process, fits
//! logistic revenue-per-user growth under competing ceiling scenarios, and
//! produces a discounted-cash-flow valuation distribution.

pub mod decay;
pub mod innovation;
pub mod revenue;
pub mod scenario;
pub mod timeseries;
pub mod valuation;

pub use decay::{GameCurve, TailParams};
pub use innovation::{DiagnosticsReport, InterEventSample, PoissonFit};
pub use revenue::{LogisticParams, RevenuePerDauPoint, ScenarioLabel};
pub use scenario::{ScenarioSet, SimConfig};
pub use timeseries::{DailyAggregate, DauSeries, GameCatalog, GapPolicy, QuarterlyFinancials};
pub use valuation::{RevenueSchedule, ValuationConfig, ValuationDistribution};
