use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use entropy_flow::io::{read_values_for_grid, write_field_csv};
use entropy_flow::{gibbs_solve, EnergyDensity, Grid};
use entropy_flow_cli::{expand, run_scenario, run_sweep, simulate, ScenarioConfig, Vary};

/// Step count of the sine example, recorded on its first run.
const SINE_STEPS: usize = 1784;

fn config(text: &str, dir: &Path) -> ScenarioConfig {
    let mut c = ScenarioConfig::parse(text, dir).unwrap();
    c.output_dir = dir.join("out");
    c
}

const SINE: &str = "a = 0\nb = 2\nn = 200\nmode = mass-only\ninitial = perturbed-sine:0.5\n";
const GIBBS: &str = "a = 0\nb = 1\nn = 200\nmode = mass-energy\ninitial = gibbs-perturbed:0.4\n\
                     energy.h = linear\nenergy.E = 0.4\nseed = 1\n";

fn read_density(path: &Path, grid: &Grid) -> Vec<f64> {
    read_values_for_grid(fs::File::open(path).unwrap(), grid).unwrap()
}

#[test]
fn uniform_converges_at_step_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("a = 0\nb = 2\nn = 50\ninitial = uniform\n", dir.path());
    let report = run_scenario(&cfg);
    let s = report.summary.unwrap();
    assert!(s.converged);
    assert_eq!(s.steps, 0);
    assert_eq!(s.final_dist_linf, 0.0);
    for f in [
        "trajectory.csv",
        "final_density.csv",
        "limit_density.csv",
        "summary.json",
    ] {
        assert!(cfg.output_dir.join(f).is_file(), "{f}");
    }
}

#[test]
fn perturbed_sine_reaches_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(SINE, dir.path());
    let s = run_scenario(&cfg).summary.unwrap();
    assert!(s.converged);
    assert!(s.final_dist_linf < 1e-6);
    assert_eq!(s.steps, SINE_STEPS);
    let grid = Grid::uniform(0.0, 2.0, 200).unwrap();
    let p = read_density(&cfg.output_dir.join("final_density.csv"), &grid);
    assert!(p.iter().all(|v| (v - 0.5).abs() < 1e-6));
}

#[test]
fn mass_energy_reaches_gibbs_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(GIBBS, dir.path());
    let s = run_scenario(&cfg).summary.unwrap();
    assert!(s.converged);

    let grid = Arc::new(Grid::uniform(0.0, 1.0, 200).unwrap());
    let h = EnergyDensity::from_fn(grid.clone(), |r| r, 0.4).unwrap();
    let star = gibbs_solve(&h).unwrap().density;
    let p = read_density(&cfg.output_dir.join("final_density.csv"), &grid);
    let diff: Vec<f64> = p.iter().zip(star.values()).map(|(a, b)| a - b).collect();
    let rel = grid.inner(&diff, &diff).unwrap().sqrt()
        / grid.inner(star.values(), star.values()).unwrap().sqrt();
    assert!(rel < 1e-4, "{rel}");
    assert!((s.final_entropy - s.limit_entropy).abs() < 1e-6);
}

#[test]
fn identical_config_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{GIBBS}max_steps = 300\n");
    let mut a = config(&text, dir.path());
    let mut b = a.clone();
    a.output_dir = dir.path().join("a");
    b.output_dir = dir.path().join("b");
    run_scenario(&a);
    run_scenario(&b);
    for f in ["trajectory.csv", "final_density.csv", "limit_density.csv"] {
        let x = fs::read(a.output_dir.join(f)).unwrap();
        let y = fs::read(b.output_dir.join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn written_density_reloads_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&format!("{GIBBS}max_steps = 200\n"), dir.path());
    let first = simulate(&cfg).unwrap();
    run_scenario(&cfg);

    // replay the written final state as the initial density of a zero-step run
    let mut replay = cfg.clone();
    replay
        .apply_overrides(&[
            format!(
                "initial=custom-csv:{}",
                cfg.output_dir.join("final_density.csv").display()
            ),
            "max_steps=0".to_string(),
        ])
        .unwrap();
    let again = simulate(&replay).unwrap();
    assert_eq!(again.final_density.values(), first.final_density.values());
}

#[test]
fn custom_energy_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::uniform(0.0, 1.0, 200).unwrap();
    let h_path = dir.path().join("h.csv");
    write_field_csv(
        fs::File::create(&h_path).unwrap(),
        "h",
        grid.nodes(),
        grid.nodes(),
    )
    .unwrap();

    let base = format!("{GIBBS}max_steps = 100\n");
    let builtin = simulate(&config(&base, dir.path())).unwrap();
    let custom = simulate(&config(
        &format!("{base}energy.h = custom-csv:h.csv\n"),
        dir.path(),
    ))
    .unwrap();
    assert_eq!(
        builtin.final_density.values(),
        custom.final_density.values()
    );
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&format!("{SINE}n = 40\nmax_steps = 50\n"), dir.path());
    let vary: Vary = "gamma=0.5,1,2".parse().unwrap();
    let configs = expand(&cfg, &vary).unwrap();
    let reports = run_sweep(&configs);
    assert_eq!(reports.len(), 3);
    for v in ["0.5", "1", "2"] {
        assert!(cfg
            .output_dir
            .join(format!("gamma={v}/summary.json"))
            .is_file());
    }
    // larger gamma moves further in the same number of steps
    let d: Vec<f64> = reports
        .iter()
        .map(|r| r.summary.as_ref().unwrap().final_dist_linf)
        .collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    assert!("output.dir=x,y".parse::<Vary>().is_err());
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_entropy-flow"))
}

#[test]
fn binary_exit_codes_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, format!("{GIBBS}max_steps = 20\n")).unwrap();

    let out = dir.path().join("env-out");
    let status = bin()
        .args(["run", "--config"])
        .arg(&conf)
        .env("ENTROPY_FLOW_OUT", &out)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["converged"], false);
    assert_eq!(summary["steps"], 20);

    let status = bin()
        .args(["run", "--config"])
        .arg(&conf)
        .args(["--set", "energy.E=3"])
        .env("ENTROPY_FLOW_OUT", &out)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(1));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["error"]["code"], "target-out-of-range");

    let status = bin()
        .args(["run", "--config"])
        .arg(&conf)
        .args(["--set", "mode=sideways"])
        .env("ENTROPY_FLOW_OUT", &out)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));

    let output = bin()
        .args(["run", "--config"])
        .arg(&conf)
        .args(["--set", "dt=0.9"])
        .env("ENTROPY_FLOW_OUT", &out)
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&output.stderr).contains("stability cap"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn verify_reports_stability_warning() {
    let output = bin()
        .args(["verify", "--quick", "--dt", "0.6"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text
        .lines()
        .next()
        .unwrap()
        .starts_with("warning: dt*gamma = 0.6"));
    let lines: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("PASS") || l.starts_with("FAIL"))
        .collect();
    assert_eq!(lines.len(), 10, "{text}");
    assert_eq!(
        output.status.code(),
        Some(i32::from(lines.iter().any(|l| l.starts_with("FAIL"))))
    );
}
