//! Scenario runner for the entropy-flow simulations.

pub mod config;
pub mod scenario;
pub mod sweep;

pub use config::{ConfigError, Mode, ScenarioConfig};
pub use scenario::{apply_env_output, run_scenario, simulate, Report, ScenarioError};
pub use sweep::{expand, run_sweep, Vary};
