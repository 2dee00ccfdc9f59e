use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use entropy_flow::verify::{self, SuiteConfig};
use entropy_flow_cli::{
    apply_env_output, expand, run_scenario, run_sweep, Report, ScenarioConfig, Vary,
};

#[derive(Parser)]
#[command(
    name = "entropy-flow",
    version,
    about = "Entropy-maximizing density flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a config entry (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run the acceptance criteria and print one line per criterion.
    Verify {
        /// Smaller grid and fewer runs.
        #[arg(long)]
        quick: bool,
        /// Time step for the convergence runs.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Run a scenario once per value of one key, in parallel.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_name = "KEY=V1,V2,...")]
        vary: Vary,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn load(config: &Path, overrides: &[String]) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::from_file(config)?;
    cfg.apply_overrides(overrides)?;
    apply_env_output(&mut cfg);
    Ok(cfg)
}

fn print_report(label: &str, dir: &Path, report: &Report) {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match (&report.summary, &report.error) {
        (_, Some(e)) => eprintln!("{label}error [{}]: {}", e.code, e.message),
        (Some(s), None) => println!(
            "{label}{} after {} steps: S = {:.10}, S* = {:.10}, dist_linf = {:.3e} -> {}",
            if s.converged {
                "converged"
            } else {
                "not converged"
            },
            s.steps,
            s.final_entropy,
            s.limit_entropy,
            s.final_dist_linf,
            dir.display()
        ),
        (None, None) => {}
    }
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code.clamp(0, 255) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, overrides } => load(&config, &overrides).map(|cfg| {
            let report = run_scenario(&cfg);
            print_report("", &cfg.output_dir, &report);
            report.exit_code()
        }),
        Command::Sweep {
            config,
            vary,
            overrides,
        } => load(&config, &overrides).and_then(|cfg| {
            let configs = expand(&cfg, &vary).context("expanding sweep")?;
            let reports = run_sweep(&configs);
            let mut code = 0;
            for ((value, cfg), report) in vary.values.iter().zip(&configs).zip(&reports) {
                print_report(&format!("{}={value}: ", vary.key), &cfg.output_dir, report);
                code = code.max(report.exit_code());
            }
            Ok(code)
        }),
        Command::Verify { quick, dt } => {
            let mut suite = SuiteConfig::default();
            if quick {
                suite.n = 200;
                suite.runs = 3;
                suite.refinement = vec![100, 200, 400];
            }
            if let Some(dt) = dt {
                suite.params.dt = dt;
            }
            for w in suite.warnings() {
                println!("warning: {w}");
            }
            let results = verify::run_all(suite);
            let failed = results.iter().filter(|r| !r.passed).count();
            for r in &results {
                println!("{}", r.line());
            }
            println!(
                "{} of {} criteria passed",
                results.len() - failed,
                results.len()
            );
            Ok(i32::from(failed > 0))
        }
    };
    match result {
        Ok(code) => exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            exit(2)
        }
    }
}
