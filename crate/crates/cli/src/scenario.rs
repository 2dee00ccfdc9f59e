//! Execute one scenario and write its artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use entropy_flow::initial::{build_initial, InitialSpec};
use entropy_flow::integrator::run;
use entropy_flow::io::{
    load_values_csv, save_density_csv, write_trajectory_csv, TrajectorySummary,
};
use entropy_flow::{Constraints, EnergyDensity, Grid, Trajectory};

use crate::config::{ConfigError, FieldChoice, InitialChoice, ScenarioConfig};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const FINAL_DENSITY_FILE: &str = "final_density.csv";
pub const LIMIT_DENSITY_FILE: &str = "limit_density.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Output-directory override.
pub const OUT_ENV: &str = "ENTROPY_FLOW_OUT";

#[derive(Debug)]
pub enum ScenarioError {
    Config(ConfigError),
    Run(entropy_flow::Error),
}

impl ScenarioError {
    pub fn code(&self) -> &'static str {
        match self {
            ScenarioError::Config(_) => "config-invalid",
            ScenarioError::Run(e) => e.code(),
        }
    }
}

impl std::fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScenarioError::Config(e) => write!(f, "invalid configuration: {e}"),
            ScenarioError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for ScenarioError {
    fn from(e: ConfigError) -> Self {
        ScenarioError::Config(e)
    }
}

impl From<entropy_flow::Error> for ScenarioError {
    fn from(e: entropy_flow::Error) -> Self {
        ScenarioError::Run(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub code: String,
    pub message: String,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub mode: &'static str,
    #[serde(flatten)]
    pub summary: Option<TrajectorySummary>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorReport>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        match &self.error {
            None => 0,
            Some(e) if e.code == "config-invalid" => 2,
            Some(_) => 1,
        }
    }
}

/// Replace the output directory with `$ENTROPY_FLOW_OUT` when it is set.
pub fn apply_env_output(config: &mut ScenarioConfig) {
    if let Some(dir) = std::env::var_os(OUT_ENV).filter(|d| !d.is_empty()) {
        config.output_dir = PathBuf::from(dir);
    }
}

fn energy_density(
    grid: &Arc<Grid>,
    h: &FieldChoice,
    target: f64,
) -> Result<EnergyDensity, ScenarioError> {
    let h = match h {
        FieldChoice::Linear => EnergyDensity::from_fn(grid.clone(), |r| r, target)?,
        FieldChoice::Quadratic => EnergyDensity::from_fn(grid.clone(), |r| r * r, target)?,
        FieldChoice::CustomCsv(path) => {
            EnergyDensity::new(grid.clone(), load_values_csv(path, grid)?, target)?
        }
    };
    h.check_target()?;
    Ok(h)
}

fn initial_spec(choice: &InitialChoice, grid: &Grid) -> Result<InitialSpec, ScenarioError> {
    Ok(match choice {
        InitialChoice::Uniform => InitialSpec::Uniform,
        InitialChoice::PerturbedSine(amplitude) => InitialSpec::PerturbedSine {
            amplitude: *amplitude,
        },
        InitialChoice::GibbsPerturbed(noise) => InitialSpec::GibbsPerturbed { noise: *noise },
        InitialChoice::CustomCsv(path) => InitialSpec::Values(load_values_csv(path, grid)?),
    })
}

/// Build and integrate the scenario without touching the filesystem
/// (apart from reading `custom-csv` inputs).
pub fn simulate(config: &ScenarioConfig) -> Result<Trajectory, ScenarioError> {
    config.validate()?;
    let grid = Arc::new(Grid::uniform(config.a, config.b, config.n)?);
    let energy = match config.energy()? {
        Some(e) => Some(energy_density(&grid, &e.h, e.target)?),
        None => None,
    };
    let constraints = match &energy {
        Some(h) => Constraints::MassEnergy(h),
        None => Constraints::MassOnly,
    };
    let spec = initial_spec(&config.initial, &grid)?;
    let p0 = build_initial(&grid, &spec, constraints, config.seed, config.floor)?;
    Ok(run(&p0, constraints, &config.params())?)
}

fn write_artifacts(dir: &Path, t: &Trajectory) -> Result<(), entropy_flow::Error> {
    write_trajectory_csv(fs::File::create(dir.join(TRAJECTORY_FILE))?, &t.records)?;
    save_density_csv(&dir.join(FINAL_DENSITY_FILE), &t.final_density)?;
    save_density_csv(&dir.join(LIMIT_DENSITY_FILE), &t.limit)?;
    Ok(())
}

fn write_report(dir: &Path, report: &Report) -> Result<(), entropy_flow::Error> {
    let file = fs::File::create(dir.join(SUMMARY_FILE))?;
    serde_json::to_writer_pretty(file, report)?;
    Ok(())
}

/// Run the scenario and write `trajectory.csv`, `final_density.csv`,
/// `limit_density.csv` and `summary.json` into `config.output_dir`.
///
/// Failures are recorded in the report (and in `summary.json` when the
/// directory can be created); non-convergence is not a failure.
pub fn run_scenario(config: &ScenarioConfig) -> Report {
    let dir = &config.output_dir;
    let warnings: Vec<String> = config.params().stability_warning().into_iter().collect();
    let mut report = Report {
        mode: config.mode.name(),
        summary: None,
        warnings,
        error: None,
    };
    let outcome = fs::create_dir_all(dir)
        .map_err(|e| ScenarioError::Run(e.into()))
        .and_then(|_| simulate(config))
        .and_then(|t| {
            write_artifacts(dir, &t)?;
            Ok(t)
        });
    match outcome {
        Ok(t) => {
            for w in &t.warnings {
                if !report.warnings.contains(w) {
                    report.warnings.push(w.clone());
                }
            }
            report.summary = Some(TrajectorySummary::from_trajectory(&t));
        }
        Err(e) => {
            report.error = Some(ErrorReport {
                code: e.code().to_string(),
                message: e.to_string(),
            })
        }
    }
    if dir.is_dir() {
        if let Err(e) = write_report(dir, &report) {
            report.error.get_or_insert(ErrorReport {
                code: e.code().to_string(),
                message: e.to_string(),
            });
        }
    }
    report
}
