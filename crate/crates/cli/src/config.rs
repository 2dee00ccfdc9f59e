//! Scenario configuration: a flat `key = value` file plus overrides.
//!
//! ```text
//! # carrier
//! a = 0
//! b = 2
//! n = 500
//! mode = mass-energy
//! gamma = 1
//! dt = 0.005
//! initial = gibbs-perturbed:0.3
//! energy.h = linear
//! energy.E = 0.9
//! seed = 4
//! output.dir = out/run1
//! ```
//!
//! Blank lines and `#` comments are ignored. Relative `custom-csv:` paths are
//! resolved against the directory of the config file.

use std::fmt;
use std::path::{Path, PathBuf};

use entropy_flow::dynamics::SgParams;
use entropy_flow::DEFAULT_FLOOR;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    MassOnly,
    MassEnergy,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::MassOnly => "mass-only",
            Mode::MassEnergy => "mass-energy",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialChoice {
    Uniform,
    PerturbedSine(f64),
    GibbsPerturbed(f64),
    CustomCsv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldChoice {
    Linear,
    Quadratic,
    CustomCsv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyConfig {
    pub h: FieldChoice,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub mode: Mode,
    pub gamma: f64,
    pub dt: f64,
    pub max_steps: usize,
    pub stop_tol: f64,
    pub floor: f64,
    pub initial: InitialChoice,
    pub energy_h: Option<FieldChoice>,
    pub energy_target: Option<f64>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub stride: Option<usize>,
    base_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let p = SgParams::default();
        Self {
            a: 0.0,
            b: 1.0,
            n: 200,
            mode: Mode::MassOnly,
            gamma: p.gamma,
            dt: p.dt,
            max_steps: p.max_steps,
            stop_tol: p.stop_tol,
            floor: DEFAULT_FLOOR,
            initial: InitialChoice::Uniform,
            energy_h: None,
            energy_target: None,
            seed: 0,
            output_dir: PathBuf::from("out"),
            stride: None,
            base_dir: PathBuf::new(),
        }
    }
}

pub const KEYS: [&str; 15] = [
    "a",
    "b",
    "n",
    "mode",
    "gamma",
    "dt",
    "max_steps",
    "stop_tol",
    "floor",
    "initial",
    "energy.h",
    "energy.E",
    "seed",
    "output.dir",
    "output.stride",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| invalid(format!("{key}: cannot parse {value:?}")))
}

/// Split `name:arg`.
fn named(value: &str) -> (&str, Option<&str>) {
    match value.split_once(':') {
        Some((n, arg)) => (n.trim(), Some(arg.trim())),
        None => (value, None),
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg = Self {
            base_dir: base_dir.to_path_buf(),
            ..Self::default()
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| invalid(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    /// Apply `key=value` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<(), ConfigError> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| invalid(format!("override {o:?}: expected key=value")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    fn path(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "a" => self.a = num(key, value)?,
            "b" => self.b = num(key, value)?,
            "n" => self.n = num(key, value)?,
            "mode" => {
                self.mode = match value {
                    "mass-only" => Mode::MassOnly,
                    "mass-energy" => Mode::MassEnergy,
                    _ => return Err(invalid(format!("mode: unknown {value:?}"))),
                }
            }
            "gamma" => self.gamma = num(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "max_steps" => self.max_steps = num(key, value)?,
            "stop_tol" => self.stop_tol = num(key, value)?,
            "floor" => self.floor = num(key, value)?,
            "initial" => {
                self.initial = match named(value) {
                    ("uniform", None) => InitialChoice::Uniform,
                    ("perturbed-sine", Some(a)) => InitialChoice::PerturbedSine(num(key, a)?),
                    ("gibbs-perturbed", Some(a)) => InitialChoice::GibbsPerturbed(num(key, a)?),
                    ("custom-csv", Some(p)) => InitialChoice::CustomCsv(self.path(p)),
                    _ => return Err(invalid(format!("initial: unknown spec {value:?}"))),
                }
            }
            "energy.h" => {
                self.energy_h = Some(match named(value) {
                    ("linear", None) => FieldChoice::Linear,
                    ("quadratic", None) => FieldChoice::Quadratic,
                    ("custom-csv", Some(p)) => FieldChoice::CustomCsv(self.path(p)),
                    _ => return Err(invalid(format!("energy.h: unknown spec {value:?}"))),
                })
            }
            "energy.E" => self.energy_target = Some(num(key, value)?),
            "seed" => self.seed = num(key, value)?,
            "output.dir" => self.output_dir = PathBuf::from(value),
            "output.stride" => {
                self.stride = match value {
                    "" | "auto" => None,
                    v => Some(num(key, v)?),
                }
            }
            _ => {
                return Err(invalid(format!(
                    "unknown key {key:?} (expected one of {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// The energy block, required in mass-energy mode.
    pub fn energy(&self) -> Result<Option<EnergyConfig>, ConfigError> {
        match (self.mode, &self.energy_h, self.energy_target) {
            (Mode::MassOnly, _, _) => Ok(None),
            (Mode::MassEnergy, Some(h), Some(target)) => Ok(Some(EnergyConfig {
                h: h.clone(),
                target,
            })),
            (Mode::MassEnergy, _, _) => {
                Err(invalid("mode mass-energy requires energy.h and energy.E"))
            }
        }
    }

    pub fn params(&self) -> SgParams {
        SgParams {
            gamma: self.gamma,
            dt: self.dt,
            floor: self.floor,
            max_steps: self.max_steps,
            stop_tol: self.stop_tol,
            stride: self.stride,
        }
    }

    /// Checks that need no I/O.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.a.is_finite() && self.b.is_finite() && self.a < self.b) {
            return Err(invalid(format!(
                "carrier: need a < b, got [{}, {}]",
                self.a, self.b
            )));
        }
        if self.n == 0 {
            return Err(invalid("n must be >= 1"));
        }
        if let Some(e) = self.energy_target {
            if !e.is_finite() {
                return Err(invalid("energy.E must be finite"));
            }
        }
        self.params()
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        self.energy()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text = "\
# comment
a = -1
b = 3   # trailing
n = 64
mode = mass-energy
gamma = 2
dt = 0.01
max_steps = 10
stop_tol = 1e-9
floor = 1e-10
initial = perturbed-sine:0.25
energy.h = custom-csv:h.csv
energy.E = 0.7
seed = 9
output.dir = somewhere
output.stride = 3
";
        let c = ScenarioConfig::parse(text, Path::new("/cfg")).unwrap();
        assert_eq!((c.a, c.b, c.n), (-1.0, 3.0, 64));
        assert_eq!(c.mode, Mode::MassEnergy);
        assert_eq!((c.gamma, c.dt, c.max_steps), (2.0, 0.01, 10));
        assert_eq!((c.stop_tol, c.floor, c.seed), (1e-9, 1e-10, 9));
        assert_eq!(c.initial, InitialChoice::PerturbedSine(0.25));
        assert_eq!(
            c.energy_h,
            Some(FieldChoice::CustomCsv(PathBuf::from("/cfg/h.csv")))
        );
        assert_eq!(c.energy_target, Some(0.7));
        assert_eq!(c.output_dir, PathBuf::from("somewhere"));
        assert_eq!(c.stride, Some(3));
        c.validate().unwrap();
    }

    #[test]
    fn overrides_win() {
        let mut c = ScenarioConfig::parse("gamma = 1\n", Path::new("")).unwrap();
        c.apply_overrides(&["gamma=0.5", "initial=gibbs-perturbed:0.1"])
            .unwrap();
        assert_eq!(c.gamma, 0.5);
        assert_eq!(c.initial, InitialChoice::GibbsPerturbed(0.1));
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "nonsense\n",
            "colour = red\n",
            "n = -3\n",
            "initial = sine\n",
            "mode = both\n",
        ] {
            assert!(
                ScenarioConfig::parse(text, Path::new("")).is_err(),
                "{text}"
            );
        }
        let c = ScenarioConfig::parse("mode = mass-energy\nenergy.h = linear\n", Path::new(""))
            .unwrap();
        assert!(c.validate().is_err());
        let c = ScenarioConfig::parse("a = 2\nb = 1\n", Path::new("")).unwrap();
        assert!(c.validate().is_err());
        let c = ScenarioConfig::parse("dt = 0\n", Path::new("")).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn energy_block_optional_in_mass_only() {
        let c = ScenarioConfig::parse("energy.E = 0.4\n", Path::new("")).unwrap();
        assert_eq!(c.energy().unwrap(), None);
    }
}
