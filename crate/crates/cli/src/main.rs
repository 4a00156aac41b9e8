use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use matfactor::estimators::Method;
use matfactor::io::PanelFormat;
use matfactor::selection::Demean;
use matfactor_cli::config::ExperimentConfig;
use matfactor_cli::{run, Command};

/// Projected estimation for matrix factor models: simulation studies and
/// panel analyses.
#[derive(Parser)]
#[command(name = "matfactor", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; replication i uses seed + i.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of Monte Carlo replications.
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Loading estimator: initial, projected, recursive or recursive:N.
    #[arg(long, global = true)]
    method: Option<Method>,
    /// Largest factor number considered by selection.
    #[arg(long, global = true)]
    kmax: Option<usize>,
    /// Coefficient of the ratio regularizer.
    #[arg(long = "c", global = true, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Demeaning before selection: none, mean or double.
    #[arg(long, global = true)]
    demean: Option<Demean>,
    /// Panel file format: long or stacked.
    #[arg(long, global = true)]
    format: Option<PanelFormat>,
    /// Panel file for estimate, rolling and faar.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Truth file written by `generate`; estimate fails when the fitted
    /// spans are farther than its tolerance.
    #[arg(long, global = true)]
    verify_against: Option<PathBuf>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Loading-space distances and common-component errors over a grid.
    SimulateStudy,
    /// Factor-number selection frequencies over a grid.
    SelectKStudy,
    /// Mean distances against log √(T·p) with fitted slopes.
    RatePlot,
    /// Standardized loading errors and normality statistics.
    Normality,
    /// Mean distance to the truth at each recursion step.
    RecursiveTrace,
    /// Fit loadings and factors on a panel file.
    Estimate,
    /// Rolling out-of-sample validation on a panel file.
    Rolling,
    /// Factor-augmented autoregressive forecasts on a panel file.
    Faar,
    /// Write a synthetic panel with its planted truth.
    Generate,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::SimulateStudy => Command::SimulateStudy,
            Cmd::SelectKStudy => Command::SelectKStudy,
            Cmd::RatePlot => Command::RatePlot,
            Cmd::Normality => Command::Normality,
            Cmd::RecursiveTrace => Command::RecursiveTrace,
            Cmd::Estimate => Command::Estimate,
            Cmd::Rolling => Command::Rolling,
            Cmd::Faar => Command::Faar,
            Cmd::Generate => Command::Generate,
        }
    }
}

fn resolve(cli: &Cli) -> matfactor::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.reps {
        cfg.replications = n;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = Some(o.clone());
    }
    if let Some(m) = cli.method {
        cfg.methods = vec![m];
    }
    if let Some(k) = cli.kmax {
        cfg.selection.k_max = k;
    }
    if let Some(c) = cli.c {
        cfg.selection.c = c;
    }
    if let Some(d) = cli.demean {
        cfg.selection.demean = d;
        cfg.study.demeans = vec![d];
    }
    if let Some(f) = cli.format {
        cfg.panel.format = f;
    }
    if let Some(p) = &cli.input {
        cfg.panel.path = Some(p.clone());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli.command.into(), &cfg, cli.verify_against.as_deref()) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
