//! Parameter sweeps: one scenario per value, run in parallel.

use rayon::prelude::*;

use crate::config::{ConfigError, ScenarioConfig, KEYS};
use crate::scenario::{run_scenario, Report};

/// `key=v1,v2,...`
#[derive(Debug, Clone, PartialEq)]
pub struct Vary {
    pub key: String,
    pub values: Vec<String>,
}

impl std::str::FromStr for Vary {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, list) = s
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("--vary {s:?}: expected key=v1,v2,...")))?;
        let key = key.trim();
        if !KEYS.contains(&key) || key == "output.dir" {
            return Err(ConfigError(format!("--vary: cannot sweep over {key:?}")));
        }
        let values: Vec<String> = list
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(ConfigError(format!("--vary {key}: no values")));
        }
        Ok(Self {
            key: key.to_string(),
            values,
        })
    }
}

/// One configuration per value, each writing to `<output.dir>/<key>=<value>`.
pub fn expand(base: &ScenarioConfig, vary: &Vary) -> Result<Vec<ScenarioConfig>, ConfigError> {
    vary.values
        .iter()
        .map(|v| {
            let mut cfg = base.clone();
            cfg.set(&vary.key, v)?;
            cfg.output_dir =
                base.output_dir
                    .join(format!("{}={}", vary.key, v.replace(['/', ':'], "_")));
            Ok(cfg)
        })
        .collect()
}

/// Run every configuration; reports come back in input order.
pub fn run_sweep(configs: &[ScenarioConfig]) -> Vec<Report> {
    configs.par_iter().map(run_scenario).collect()
}
