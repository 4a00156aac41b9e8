//! Experiment runner behind the `matfactor` binary.

pub mod config;
pub mod data;
pub mod studies;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::info;
use matfactor::io::{rolling_table, Table};
use serde::Serialize;

use config::{ExperimentConfig, CONFIG_FORMAT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SimulateStudy,
    SelectKStudy,
    RatePlot,
    Normality,
    RecursiveTrace,
    Estimate,
    Rolling,
    Faar,
    Generate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SimulateStudy => "simulate-study",
            Command::SelectKStudy => "select-k-study",
            Command::RatePlot => "rate-plot",
            Command::Normality => "normality",
            Command::RecursiveTrace => "recursive-trace",
            Command::Estimate => "estimate",
            Command::Rolling => "rolling",
            Command::Faar => "faar",
            Command::Generate => "generate",
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Lib(matfactor::Error),
    /// Estimated loadings are farther from the planted truth than allowed.
    Verification(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Lib(e) => write!(f, "{e}"),
            RunError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<matfactor::Error> for RunError {
    fn from(e: matfactor::Error) -> Self {
        RunError::Lib(e)
    }
}

impl RunError {
    /// 2 usage, 3 data, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Lib(e) => e.exit_code(),
            RunError::Verification(_) => 4,
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    config_format: &'a str,
    command: &'a str,
    seed: u64,
    replications: usize,
    created_unix_seconds: u64,
    files: Vec<String>,
    config: &'a ExperimentConfig,
}

/// Output directory of a run: the configured one or `matfactor-out/<command>`.
pub fn output_dir(cfg: &ExperimentConfig, command: Command) -> PathBuf {
    cfg.output_dir.clone().unwrap_or_else(|| Path::new("matfactor-out").join(command.name()))
}

fn write_manifest(dir: &Path, command: Command, cfg: &ExperimentConfig, files: &[String]) -> matfactor::Result<()> {
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let manifest = Manifest {
        tool: "matfactor",
        version: matfactor::VERSION,
        config_format: CONFIG_FORMAT,
        command: command.name(),
        seed: cfg.seed,
        replications: cfg.replications,
        created_unix_seconds: created,
        files: files.to_vec(),
        config: cfg,
    };
    let path = dir.join("manifest.toml");
    let text = toml::to_string(&manifest).map_err(|e| matfactor::Error::Config(e.to_string()))?;
    fs::write(&path, text).map_err(|e| matfactor::Error::io(&path, e))
}

fn write_tables(dir: &Path, tables: &[(String, Table)]) -> matfactor::Result<Vec<String>> {
    for (name, t) in tables {
        t.write(&dir.join(name))?;
    }
    Ok(tables.iter().map(|(n, _)| n.clone()).collect())
}

fn named(name: &str, table: Table) -> (String, Table) {
    (name.to_string(), table)
}

/// Runs `command`, writes its files and manifest, and returns the output
/// directory.
pub fn run(command: Command, cfg: &ExperimentConfig, verify_against: Option<&Path>) -> Result<PathBuf, RunError> {
    cfg.validate()?;
    let dir = output_dir(cfg, command);
    fs::create_dir_all(&dir).map_err(|e| matfactor::Error::io(&dir, e))?;
    info!("writing {} results to {}", command.name(), dir.display());
    let mut verification_failure = None;
    let files = match command {
        Command::SimulateStudy => {
            let cells = studies::simulation_study(cfg)?;
            let (dist, mse) = studies::simulation_tables(&cells);
            write_tables(&dir, &[named("distances.csv", dist), named("common_mse.csv", mse)])?
        }
        Command::SelectKStudy => {
            let cells = studies::selection_study(cfg)?;
            write_tables(&dir, &[named("selection.csv", studies::selection_table(&cells, cfg.selection.c))])?
        }
        Command::RatePlot => {
            let (cells, slopes) = studies::rate_study(cfg)?;
            let (plot, fit) = studies::rate_tables(&cells, &slopes);
            write_tables(&dir, &[named("rate_plot.csv", plot), named("rate_slope.csv", fit)])?
        }
        Command::Normality => {
            let cmp = studies::normality_study(cfg)?;
            let (samples, summary) = studies::normality_tables(&cmp, cfg.seed);
            write_tables(&dir, &[named("normality_samples.csv", samples), named("normality_summary.csv", summary)])?
        }
        Command::RecursiveTrace => {
            let trace = studies::recursion_study(cfg)?;
            write_tables(&dir, &[named("recursive_trace.csv", studies::recursion_table(&trace))])?
        }
        Command::Estimate => {
            let out = data::estimate(cfg, verify_against)?;
            if let Some(v) = &out.verification {
                if !v.passed() {
                    verification_failure = Some(format!(
                        "row distance {:e}, column distance {:e}, tolerance {:e}",
                        v.row_distance, v.col_distance, v.tolerance
                    ));
                }
            }
            write_tables(&dir, &out.tables)?
        }
        Command::Rolling => {
            let (method, report) = data::rolling(cfg)?;
            write_tables(
                &dir,
                &[
                    named("rolling.csv", rolling_table(&report)),
                    named("rolling_summary.csv", data::rolling_summary_table(cfg, method, &report)),
                ],
            )?
        }
        Command::Faar => {
            let (panel, results) = data::faar(cfg)?;
            let (summary, preds) = data::faar_tables(cfg, &panel.ids.periods, &results);
            write_tables(&dir, &[named("faar.csv", summary), named("faar_predictions.csv", preds)])?
        }
        Command::Generate => {
            let generated = data::generate(cfg, &dir)?;
            let mut files: Vec<String> = ["panel.csv", "truth_R.csv", "truth_C.csv", "truth_factors.csv", "truth.toml"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            if generated.target.is_some() {
                files.push("target.csv".into());
            }
            files
        }
    };
    write_manifest(&dir, command, cfg, &files)?;
    match verification_failure {
        Some(m) => Err(RunError::Verification(m)),
        None => Ok(dir),
    }
}
