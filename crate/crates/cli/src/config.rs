//! Pipeline configuration: a TOML file with sections, overridden by CLI
//! flags, hashed (together with the input file contents) into the cache key.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use dauval_core::timeseries::GapPolicy;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("input file does not exist: {0}")]
    MissingInput(PathBuf),
    #[error("output directory {path} is not creatable: {source}")]
    OutputDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("missing prerequisite artifact {path}; run `{hint}` first")]
    MissingArtifact { path: PathBuf, hint: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputsSection {
    pub dau_csv: PathBuf,
    pub financials_csv: PathBuf,
}

impl Default for InputsSection {
    fn default() -> Self {
        Self {
            dau_csv: PathBuf::from("dau.csv"),
            financials_csv: PathBuf::from("financials.csv"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub top_n: usize,
    pub gap_policy: GapPolicy,
}

impl Default for IngestSection {
    fn default() -> Self {
        Self {
            top_n: 20,
            gap_policy: GapPolicy::FillZero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailsSection {
    /// Per-game override of the day offset where the tail regime begins.
    pub t_min_overrides: BTreeMap<String, usize>,
}

impl Default for TailsSection {
    fn default() -> Self {
        Self {
            t_min_overrides: BTreeMap::new(),
        }
    }
}

/// Which release log drives the innovation rate used by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSource {
    /// Rate estimated on the top-n pool (the simulated population).
    #[default]
    TopN,
    /// Rate estimated on the full catalog.
    All,
}

impl LambdaSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LambdaSource::TopN => "top_n",
            LambdaSource::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InnovationSection {
    /// Largest autocorrelation lag (clamped to the sample size downstream).
    pub max_lag: usize,
    pub lambda_source: LambdaSource,
}

impl Default for InnovationSection {
    fn default() -> Self {
        Self {
            max_lag: 20,
            lambda_source: LambdaSource::TopN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub horizon_days: usize,
    pub n_scenarios: usize,
    pub master_seed: u64,
    /// Fix the innovation rate instead of using the estimated one.
    pub lambda_override: Option<f64>,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            horizon_days: dauval_core::scenario::DEFAULT_HORIZON_DAYS,
            n_scenarios: dauval_core::scenario::DEFAULT_N_SCENARIOS,
            master_seed: 42,
            lambda_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RevenueSection {
    /// Revenue-per-DAU ceilings (USD/DAU/year) for the three scenarios.
    pub ceiling_base: f64,
    pub ceiling_high: f64,
    pub ceiling_extreme: f64,
}

impl Default for RevenueSection {
    fn default() -> Self {
        Self {
            ceiling_base: 30.0,
            ceiling_high: 35.0,
            ceiling_extreme: 43.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValuationSection {
    pub profit_margin: f64,
    pub discount_rate: f64,
    pub shares_outstanding: u64,
    pub horizon_years: f64,
}

impl Default for ValuationSection {
    fn default() -> Self {
        Self {
            profit_margin: 0.15,
            discount_rate: 0.05,
            shares_outstanding: 699_000_000,
            horizon_years: 20.0,
        }
    }
}

/// The resolved pipeline configuration (file values plus flag overrides).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: InputsSection,
    pub output: OutputSection,
    pub ingest: IngestSection,
    pub tails: TailsSection,
    pub innovation: InnovationSection,
    pub simulation: SimulationSection,
    pub revenue: RevenueSection,
    pub valuation: ValuationSection,
}

/// CLI flag overrides; flags win over file values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub horizon_days: Option<usize>,
    pub n_scenarios: Option<usize>,
    pub lambda: Option<f64>,
    pub margin: Option<f64>,
    pub discount: Option<f64>,
    pub shares: Option<u64>,
    pub horizon_years: Option<f64>,
}

impl PipelineConfig {
    /// Load from TOML. Relative paths are resolved against the config
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: PipelineConfig =
            toml::from_str(&text).map_err(|e| ConfigError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.inputs.dau_csv = resolve(base, &config.inputs.dau_csv);
        config.inputs.financials_csv = resolve(base, &config.inputs.financials_csv);
        config.output.dir = resolve(base, &config.output.dir);
        Ok(config)
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.simulation.master_seed = seed;
        }
        if let Some(dir) = &o.out_dir {
            self.output.dir = dir.clone();
        }
        if let Some(h) = o.horizon_days {
            self.simulation.horizon_days = h;
        }
        if let Some(n) = o.n_scenarios {
            self.simulation.n_scenarios = n;
        }
        if let Some(l) = o.lambda {
            self.simulation.lambda_override = Some(l);
        }
        if let Some(m) = o.margin {
            self.valuation.profit_margin = m;
        }
        if let Some(d) = o.discount {
            self.valuation.discount_rate = d;
        }
        if let Some(s) = o.shares {
            self.valuation.shares_outstanding = s;
        }
        if let Some(h) = o.horizon_years {
            self.valuation.horizon_years = h;
        }
    }

    /// Check input existence, output creatability, and value ranges.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.inputs.dau_csv.is_file() {
            return Err(ConfigError::MissingInput(self.inputs.dau_csv.clone()));
        }
        if !self.inputs.financials_csv.is_file() {
            return Err(ConfigError::MissingInput(self.inputs.financials_csv.clone()));
        }
        fs::create_dir_all(&self.output.dir).map_err(|source| ConfigError::OutputDir {
            path: self.output.dir.clone(),
            source,
        })?;
        if self.ingest.top_n == 0 {
            return Err(ConfigError::Invalid("ingest.top_n must be >= 1".into()));
        }
        if self.simulation.horizon_days == 0 {
            return Err(ConfigError::Invalid(
                "simulation.horizon_days must be >= 1".into(),
            ));
        }
        if self.simulation.n_scenarios == 0 {
            return Err(ConfigError::Invalid(
                "simulation.n_scenarios must be >= 1".into(),
            ));
        }
        if let Some(l) = self.simulation.lambda_override {
            if !(l > 0.0) {
                return Err(ConfigError::Invalid(format!(
                    "simulation.lambda_override must be > 0, got {l}"
                )));
            }
        }
        let r = &self.revenue;
        if !(r.ceiling_base > 0.0 && r.ceiling_base <= r.ceiling_high && r.ceiling_high <= r.ceiling_extreme)
        {
            return Err(ConfigError::Invalid(format!(
                "revenue ceilings must satisfy 0 < base <= high <= extreme, got {} / {} / {}",
                r.ceiling_base, r.ceiling_high, r.ceiling_extreme
            )));
        }
        let v = &self.valuation;
        if !(v.profit_margin > 0.0 && v.profit_margin < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "valuation.profit_margin must lie in (0, 1), got {}",
                v.profit_margin
            )));
        }
        if !(v.discount_rate >= 0.0) {
            return Err(ConfigError::Invalid(format!(
                "valuation.discount_rate must be >= 0, got {}",
                v.discount_rate
            )));
        }
        if v.shares_outstanding == 0 {
            return Err(ConfigError::Invalid(
                "valuation.shares_outstanding must be > 0".into(),
            ));
        }
        if !(v.horizon_years > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "valuation.horizon_years must be > 0, got {}",
                v.horizon_years
            )));
        }
        Ok(())
    }

    /// Content hash of the computation: every config value that influences
    /// results (the output directory does not) plus the input file bytes
    /// and the tool version.
    pub fn config_hash(&self) -> Result<String, ConfigError> {
        let mut hasher = Sha256::new();
        let mut basis = self.clone();
        basis.output.dir = PathBuf::new();
        basis.inputs.dau_csv = PathBuf::new();
        basis.inputs.financials_csv = PathBuf::new();
        let canonical =
            serde_json::to_string(&basis).expect("config serializes");
        hasher.update(canonical.as_bytes());
        hasher.update(hash_file(&self.inputs.dau_csv)?);
        hasher.update(hash_file(&self.inputs.financials_csv)?);
        hasher.update(env!("CARGO_PKG_VERSION").as_bytes());
        Ok(hex::encode(hasher.finalize()))
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn hash_file(path: &Path) -> Result<[u8; 32], ConfigError> {
    let bytes = fs::read(path).map_err(|_| ConfigError::MissingInput(path.to_path_buf()))?;
    Ok(Sha256::digest(&bytes).into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_round_trip_through_toml() {
        let config = PipelineConfig::default();
        let text = toml::to_string(&config).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let config_path = dir.path().join("run.toml");
        let mut f = fs::File::create(&config_path).unwrap();
        writeln!(
            f,
            "[inputs]\ndau_csv = \"data/d.csv\"\nfinancials_csv = \"data/f.csv\"\n[output]\ndir = \"results\""
        )
        .unwrap();
        let config = PipelineConfig::load(&config_path).unwrap();
        assert_eq!(config.inputs.dau_csv, dir.path().join("data/d.csv"));
        assert_eq!(config.output.dir, dir.path().join("results"));
    }

    #[test]
    fn flags_win_over_file_values() {
        let mut config = PipelineConfig::default();
        config.apply_overrides(&Overrides {
            seed: Some(7),
            margin: Some(0.2),
            ..Overrides::default()
        });
        assert_eq!(config.simulation.master_seed, 7);
        assert_eq!(config.valuation.profit_margin, 0.2);
    }

    #[test]
    fn missing_input_is_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = PipelineConfig::default();
        config.inputs.dau_csv = dir.path().join("absent.csv");
        config.output.dir = dir.path().join("out");
        assert!(matches!(
            config.validate(),
            Err(ConfigError::MissingInput(_))
        ));
    }

    #[test]
    fn hash_ignores_output_dir_but_tracks_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let dau = dir.path().join("d.csv");
        let fin = dir.path().join("f.csv");
        fs::write(&dau, "game_id,date,dau\n").unwrap();
        fs::write(&fin, "quarter_end,revenue_usd,net_income_usd\n").unwrap();
        let mut config = PipelineConfig::default();
        config.inputs.dau_csv = dau.clone();
        config.inputs.financials_csv = fin;
        config.output.dir = dir.path().join("a");
        let h1 = config.config_hash().unwrap();
        config.output.dir = dir.path().join("b");
        assert_eq!(h1, config.config_hash().unwrap());
        fs::write(&dau, "game_id,date,dau\ng,2010-01-01,5\n").unwrap();
        assert_ne!(h1, config.config_hash().unwrap());
        config.simulation.master_seed += 1;
        let h3 = config.config_hash().unwrap();
        config.simulation.master_seed -= 1;
        assert_ne!(h3, config.config_hash().unwrap());
    }
}
