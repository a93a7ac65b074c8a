//! Bundled synthetic dataset: a seeded catalog of game DAU histories whose
//! aggregate sits in the tens of millions and stays roughly stationary in
//! its mature phase, plus a matching quarterly financials file. Used by the
//! integration suite and as a runnable demo input.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SAMPLE_DAU_CSV: &str = "sample_dau.csv";
pub const SAMPLE_FINANCIALS_CSV: &str = "sample_financials.csv";
pub const SAMPLE_CONFIG_TOML: &str = "sample_config.toml";

const DATA_START: (i32, u32, u32) = (2009, 1, 1);
const DATA_DAYS: u64 = 1127; // through 2012-01-31
const LAUNCH_GAMES: usize = 8;
const RELEASE_RATE: f64 = 0.045; // new games per day after launch
const LAUNCH_PEAK_RANGE: (f64, f64) = (1.0e7, 2.2e7);
const LATER_PEAK_RANGE: (f64, f64) = (4.0e5, 9.0e6);

struct GameSpec {
    release_day: u64,
    peak: f64,
    ramp_days: f64,
    gamma: f64,
    softness_days: f64,
}

impl GameSpec {
    fn dau(&self, age: u64, noise: f64) -> u64 {
        let t = age as f64;
        let shape = if t < self.ramp_days {
            ((t + 1.0) / (self.ramp_days + 1.0)).powf(1.7)
        } else {
            ((t - self.ramp_days + self.softness_days) / self.softness_days).powf(-self.gamma)
        };
        (self.peak * shape * noise).round().max(0.0) as u64
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
}

fn game_spec(rng: &mut ChaCha8Rng, release_day: u64, peak_lo: f64, peak_hi: f64) -> GameSpec {
    GameSpec {
        release_day,
        peak: log_uniform(rng, peak_lo, peak_hi),
        ramp_days: 40.0 + 90.0 * rng.random::<f64>(),
        gamma: 0.6 + 0.9 * rng.random::<f64>(),
        softness_days: 60.0 + 140.0 * rng.random::<f64>(),
    }
}

/// Write the three sample files into `dir` and return their paths.
pub fn write_sample_dataset(dir: &Path, seed: u64) -> std::io::Result<[PathBuf; 3]> {
    fs::create_dir_all(dir)?;
    let start = NaiveDate::from_ymd_opt(DATA_START.0, DATA_START.1, DATA_START.2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // The established titles enter the data window over its first months
    // at random days; a same-day pile-up would collapse the release log
    // under same-day merging, and a regular spacing would (correctly) trip
    // the independence diagnostic.
    let mut launch_days: Vec<u64> = (0..LAUNCH_GAMES)
        .map(|_| (rng.random::<f64>() * 150.0) as u64)
        .collect();
    launch_days.sort_unstable();
    launch_days.dedup();
    let mut specs: Vec<GameSpec> = launch_days
        .iter()
        .map(|&day| game_spec(&mut rng, day, LAUNCH_PEAK_RANGE.0, LAUNCH_PEAK_RANGE.1))
        .collect();
    let mut day = 0.0_f64;
    loop {
        let u: f64 = rng.random();
        day += -(1.0 - u).ln() / RELEASE_RATE;
        if day >= DATA_DAYS as f64 - 30.0 {
            break;
        }
        specs.push(game_spec(
            &mut rng,
            day as u64,
            LATER_PEAK_RANGE.0,
            LATER_PEAK_RANGE.1,
        ));
    }

    let mut dau_csv = String::from("game_id,date,dau\n");
    for (i, spec) in specs.iter().enumerate() {
        let id = format!("game-{i:02}");
        for age in 0..(DATA_DAYS - spec.release_day) {
            let noise = 1.0 + 0.06 * (rng.random::<f64>() - 0.5);
            let date = start + Days::new(spec.release_day + age);
            dau_csv.push_str(&format!("{id},{date},{}\n", spec.dau(age, noise)));
        }
    }
    let dau_path = dir.join(SAMPLE_DAU_CSV);
    fs::write(&dau_path, dau_csv)?;

    let financials_path = dir.join(SAMPLE_FINANCIALS_CSV);
    fs::write(&financials_path, financials_csv())?;

    let config_path = dir.join(SAMPLE_CONFIG_TOML);
    fs::write(&config_path, sample_config_toml())?;
    Ok([dau_path, financials_path, config_path])
}

/// Quarterly revenue and net income, in USD, whose yearly sums match the
/// fiscal 2008-2011 totals used across the test suite.
fn financials_csv() -> String {
    let rows: [(&str, f64, f64); 16] = [
        ("2008-03-31", 2.10, -4.00),
        ("2008-06-30", 3.80, -5.12),
        ("2008-09-30", 5.73, -6.00),
        ("2008-12-31", 7.78, -7.00),
        ("2009-03-31", 15.89, -10.00),
        ("2009-06-30", 24.12, -12.82),
        ("2009-09-30", 35.33, -14.00),
        ("2009-12-31", 46.13, -16.00),
        ("2010-03-31", 100.93, 15.00),
        ("2010-06-30", 130.10, 20.60),
        ("2010-09-30", 170.71, 25.00),
        ("2010-12-31", 195.72, 30.00),
        ("2011-03-31", 235.42, -20.00),
        ("2011-06-30", 254.70, -30.00),
        ("2011-09-30", 264.53, -50.00),
        ("2011-12-31", 311.00, -304.32),
    ];
    let mut out = String::from("quarter_end,revenue_usd,net_income_usd\n");
    for (end, rev_m, ni_m) in rows {
        out.push_str(&format!("{end},{},{}\n", rev_m * 1e6, ni_m * 1e6));
    }
    out
}

fn sample_config_toml() -> &'static str {
    r#"[inputs]
dau_csv = "sample_dau.csv"
financials_csv = "sample_financials.csv"

[output]
dir = "out"

[ingest]
top_n = 20
gap_policy = "fill_zero"

[simulation]
horizon_days = 7300
n_scenarios = 200
master_seed = 42

[valuation]
profit_margin = 0.15
discount_rate = 0.05
shares_outstanding = 699000000
horizon_years = 20.0
"#
}

#[cfg(test)]
mod tests {
    use super::*;
    use dauval_core::timeseries::{ingest_dau_csv, GapPolicy};

    /// Regenerates the committed copy under data/. Run manually after
    /// changing the generator:
    /// `cargo test -p dauval-cli regenerate_committed_sample -- --ignored`
    #[test]
    #[ignore]
    fn regenerate_committed_sample() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
        write_sample_dataset(&dir, 42).unwrap();
    }

    #[test]
    fn sample_dataset_is_deterministic_and_in_band() {
        let dir = tempfile::tempdir().unwrap();
        let [dau_a, _, _] = write_sample_dataset(&dir.path().join("a"), 42).unwrap();
        let [dau_b, _, _] = write_sample_dataset(&dir.path().join("b"), 42).unwrap();
        assert_eq!(fs::read(&dau_a).unwrap(), fs::read(&dau_b).unwrap());

        let catalog = ingest_dau_csv(&dau_a, GapPolicy::Reject).unwrap();
        assert!(catalog.len() > 25, "games: {}", catalog.len());
        let aggregate = catalog.aggregate_daily().unwrap();
        let last_year = aggregate
            .mean_over_window(aggregate.end_day(), 365)
            .unwrap();
        assert!(
            (4.3e7..7.0e7).contains(&last_year),
            "trailing-year mean aggregate DAU = {last_year}"
        );
    }
}
