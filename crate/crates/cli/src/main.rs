use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dauval_cli::config::{ConfigError, Overrides, PipelineConfig};
use dauval_cli::pipeline::{run_pipeline, run_stage, PipelineError};
use dauval_cli::report::emit_report;

/// Forecast an aggregate DAU base by seeded Monte Carlo over per-game decay
/// curves and produce a scenario valuation distribution.
#[derive(Parser)]
#[command(name = "dauval", version, about)]
struct Cli {
    /// Config file (TOML). Falls back to $DAUVAL_CONFIG, then ./dauval.toml.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress per-stage progress lines.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct SimulateArgs {
    /// Forecast length in days.
    #[arg(long)]
    horizon_days: Option<usize>,
    /// Number of Monte Carlo scenarios.
    #[arg(long)]
    scenarios: Option<usize>,
    /// Fix the innovation rate (events/day) instead of the estimated one.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args, Default)]
struct ValueArgs {
    /// Profit margin as a fraction.
    #[arg(long)]
    margin: Option<f64>,
    /// Annual discount rate as a fraction.
    #[arg(long)]
    discount: Option<f64>,
    /// Shares outstanding.
    #[arg(long)]
    shares: Option<u64>,
    /// Cash-flow horizon in years.
    #[arg(long)]
    horizon_years: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest the DAU and financials CSVs and select the top-n games.
    Ingest,
    /// Fit power-law decay tails to the selected games.
    FitTails,
    /// Run the Poisson innovation diagnostics on the release logs.
    DiagnoseInnovation,
    /// Generate the Monte Carlo DAU scenarios.
    Simulate(SimulateArgs),
    /// Fit the revenue-per-DAU growth scenarios.
    FitRevenue,
    /// Compute the valuation distribution per scenario.
    Value(ValueArgs),
    /// Render report.md from a completed run.
    Report,
    /// Run the full pipeline (with caching) and render the report.
    Run,
}

fn config_path(cli: &Cli) -> PathBuf {
    cli.config
        .clone()
        .or_else(|| std::env::var_os("DAUVAL_CONFIG").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("dauval.toml"))
}

fn load_config(cli: &Cli, overrides: Overrides) -> Result<PipelineConfig, ConfigError> {
    let mut config = PipelineConfig::load(&config_path(cli))?;
    let mut all = overrides;
    all.seed = cli.seed.or(all.seed);
    all.out_dir = cli.out.clone().or(all.out_dir);
    config.apply_overrides(&all);
    Ok(config)
}

fn run_stages(config: &PipelineConfig, stages: &[&str], quiet: bool) -> Result<(), PipelineError> {
    config.validate()?;
    for stage in stages {
        run_stage(stage, config)?;
        if !quiet {
            eprintln!("[dauval] {stage}: done");
        }
    }
    Ok(())
}

fn real_main(cli: Cli) -> Result<(), PipelineError> {
    match &cli.command {
        Command::Ingest => {
            let config = load_config(&cli, Overrides::default())?;
            run_stages(&config, &["ingest", "top_n"], cli.quiet)
        }
        Command::FitTails => {
            let config = load_config(&cli, Overrides::default())?;
            run_stages(&config, &["fit_tails"], cli.quiet)
        }
        Command::DiagnoseInnovation => {
            let config = load_config(&cli, Overrides::default())?;
            run_stages(&config, &["diagnose_innovation"], cli.quiet)
        }
        Command::Simulate(args) => {
            let config = load_config(
                &cli,
                Overrides {
                    horizon_days: args.horizon_days,
                    n_scenarios: args.scenarios,
                    lambda: args.lambda,
                    ..Overrides::default()
                },
            )?;
            run_stages(&config, &["simulate"], cli.quiet)
        }
        Command::FitRevenue => {
            let config = load_config(&cli, Overrides::default())?;
            run_stages(&config, &["fit_revenue"], cli.quiet)
        }
        Command::Value(args) => {
            let config = load_config(
                &cli,
                Overrides {
                    margin: args.margin,
                    discount: args.discount,
                    shares: args.shares,
                    horizon_years: args.horizon_years,
                    ..Overrides::default()
                },
            )?;
            run_stages(&config, &["value"], cli.quiet)
        }
        Command::Report => {
            let config = load_config(&cli, Overrides::default())?;
            let path = emit_report(&config.output.dir)?;
            if !cli.quiet {
                eprintln!("[dauval] report: {}", path.display());
            }
            Ok(())
        }
        Command::Run => {
            let config = load_config(&cli, Overrides::default())?;
            run_pipeline(&config, cli.quiet)?;
            let path = emit_report(&config.output.dir)?;
            if !cli.quiet {
                eprintln!("[dauval] report: {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                // Validation problems (bad config, missing inputs or
                // prerequisite artifacts) exit 1; stage failures exit 2.
                PipelineError::Config(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
