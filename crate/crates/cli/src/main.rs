//! Batch front end wiring the pipeline:
//! generate → split → join → fit → grid → rank → report, with figure
//! emission. `all` runs everything and writes the hashed manifest.
//!
//! Exit codes: 0 success, 2 configuration error, 3 pipeline error.

use clap::{Args, Parser, Subcommand};
use cuspfuse::config::{ConfigError, Overrides, RunConfig};
use cuspfuse::pipeline;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cuspfuse",
    version,
    about = "Simulate bistable binary choices, split them across two databases, and measure what joining the databases enables."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sample the population and write population.csv.
    Generate,
    /// Project the population into the two provider tables.
    Split,
    /// Inner-join the provider tables on the shared id.
    Join,
    /// Fit the three logistic models on the joined table.
    Fit,
    /// Evaluate each fitted model on the probability grid.
    Grid,
    /// Rank individuals by susceptibility to a fold crossing.
    Rank,
    /// Push every metastable individual just below the fold and record flips.
    Intervene,
    /// Write the fusion-gain report.
    Report,
    /// Run the whole pipeline and write the artifact manifest.
    All,
}

#[derive(Args, Clone)]
struct Flags {
    /// Flat key=value config file ('#' comments); flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Number of individuals to simulate.
    #[arg(long, global = true, value_name = "INT")]
    n: Option<usize>,

    /// Logistic steepness of the vote link.
    #[arg(long, global = true, value_name = "REAL")]
    sigma: Option<f64>,

    /// L2 penalty strength for the model fits.
    #[arg(long, global = true, value_name = "REAL")]
    lambda: Option<f64>,

    /// Points per axis of the probability grids.
    #[arg(long, global = true, value_name = "INT")]
    resolution: Option<usize>,

    /// Output directory for all artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Skip figure emission.
    #[arg(long, global = true)]
    no_svg: bool,

    /// Use analytic roots instead of the simplex minimizer.
    #[arg(long, global = true)]
    exact: bool,
}

fn resolve_config(flags: &Flags) -> Result<RunConfig, ConfigError> {
    let file_text = match &flags.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?),
        None => None,
    };
    let overrides = Overrides {
        seed: flags.seed,
        n: flags.n,
        sigma: flags.sigma,
        lambda: flags.lambda,
        resolution: flags.resolution,
        out: flags.out.clone(),
        no_svg: flags.no_svg,
        exact: flags.exact,
    };
    RunConfig::resolve(file_text.as_deref(), &overrides)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve_config(&cli.flags) {
        Ok(cfg) => cfg,
        Err(error) => {
            eprintln!("config error: {error}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Generate => pipeline::step_generate(&cfg),
        Command::Split => pipeline::step_split(&cfg),
        Command::Join => pipeline::step_join(&cfg),
        Command::Fit => pipeline::step_fit(&cfg),
        Command::Grid => pipeline::step_grid(&cfg),
        Command::Rank => pipeline::step_rank(&cfg),
        Command::Intervene => pipeline::step_intervene(&cfg),
        Command::Report => pipeline::step_report(&cfg),
        Command::All => match pipeline::run_pipeline(&cfg) {
            Ok(manifest) => {
                for entry in &manifest.files {
                    println!("{}  {}", entry.hash, entry.path);
                }
                Ok(())
            }
            Err(error) => Err(error),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("pipeline error: {error}");
            ExitCode::from(3)
        }
    }
}
