//! End-to-end verification suite.
//!
//! Ten criteria covering convergence to the MaxEnt limits, Lyapunov
//! monotonicity, conservation, entropy convergence, the algebra of the
//! centered bilinear form, equivalence of the two right-hand-side forms,
//! the speed-gradient property, and agreement between the MaxEnt solvers.
//!
//! Criteria 1–6 share one batch of trajectories ([`ConvergenceRuns`]); the
//! rest are self-contained. Every threshold is a constant in [`tol`].

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::density::{centered_bilinear, entropy_of_values, project_mass, ScalarField};
use crate::diagnostics::{gh_moment, vdot_agrees, DEFAULT_GH_EXPONENT};
use crate::dynamics::{
    apply_psi, flow, lagrange_multipliers, rhs_mass_energy, rhs_mass_only, Constraints,
    EnergyDensity, SgParams,
};
use crate::error::Result;
use crate::grid::Grid;
use crate::initial::{build_initial, InitialSpec};
use crate::integrator::{run, Trajectory};
use crate::maxent::{gibbs_solve, jaynes_maxent, uniform_limit, GibbsSolution, MomentConstraint};

/// Pass thresholds.
pub mod tol {
    /// Criterion 1: final `‖p − 1/mes‖_∞`.
    pub const UNIFORM_LINF: f64 = 1e-6;
    /// Criterion 1: wall-clock budget per run.
    pub const RUN_SECONDS: f64 = 10.0;
    /// Criterion 2: `‖p − p*‖₂ / ‖p*‖₂`.
    pub const GIBBS_REL_L2: f64 = 1e-4;
    /// Criterion 2: multipliers against `(−Γμ, Γ log C)`.
    pub const MULTIPLIERS: f64 = 1e-6;
    /// Criterion 3: `V̇` upper bound and per-step entropy decrease allowance.
    pub const MONOTONE: f64 = 1e-9;
    /// Criterion 4: fraction of steps where numeric and analytic `V̇` agree.
    pub const VDOT_FRACTION: f64 = 0.99;
    /// Criterion 5.
    pub const MASS: f64 = 1e-10;
    pub const ENERGY_REL: f64 = 1e-9;
    /// Criterion 6.
    pub const ENTROPY: f64 = 1e-6;
    pub const GH_SPREAD: f64 = 0.05;
    /// Criterion 7 (relative).
    pub const BILINEAR: f64 = 1e-10;
    /// Criterion 8.
    pub const FORMS: f64 = 1e-12;
    pub const IDEMPOTENT: f64 = 1e-10;
    /// Criterion 9.
    pub const SG_COSINE: f64 = 0.999;
    pub const SG_STEP: f64 = 1e-6;
    /// Criterion 10.
    pub const JAYNES_LINF: f64 = 1e-8;
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: u8, name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            id,
            name,
            passed,
            detail,
        }
    }

    fn failed(id: u8, name: &'static str, err: impl std::fmt::Display) -> Self {
        Self::new(id, name, false, format!("error: {err}"))
    }

    /// `PASS [ 1] name: detail`
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

/// Settings for the convergence batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub n: usize,
    pub runs: usize,
    pub params: SgParams,
    /// Relative amplitude of the seeded perturbation of the limit density.
    pub noise: f64,
    /// Grid sizes for the refinement check of criterion 6.
    pub refinement: Vec<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            n: 500,
            runs: 10,
            params: SgParams {
                gamma: 1.0,
                dt: 0.005,
                stop_tol: 1e-8,
                max_steps: 40_000,
                ..SgParams::default()
            },
            noise: 0.5,
            refinement: vec![250, 500, 1000],
        }
    }
}

impl SuiteConfig {
    pub fn warnings(&self) -> Vec<String> {
        self.params.stability_warning().into_iter().collect()
    }
}

const CARRIER: (f64, f64) = (0.0, 2.0);

/// `h(r) = r` on the test carrier with `E` 10% below the uniform energy.
pub fn test_energy(grid: &Arc<Grid>) -> Result<EnergyDensity> {
    let h = EnergyDensity::from_fn(grid.clone(), |r| r, 0.0)?;
    h.with_target(0.9 * h.uniform_energy())
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub seed: u64,
    pub trajectory: Trajectory,
    pub elapsed: Duration,
}

/// The shared batch: `runs` mass-only and `runs` mass-energy trajectories.
#[derive(Debug, Clone)]
pub struct ConvergenceRuns {
    pub config: SuiteConfig,
    pub grid: Arc<Grid>,
    pub energy: EnergyDensity,
    pub gibbs: GibbsSolution,
    pub mass_only: Vec<RunOutcome>,
    pub mass_energy: Vec<RunOutcome>,
}

fn timed_run(
    grid: &Arc<Grid>,
    constraints: Constraints<'_>,
    config: &SuiteConfig,
    seed: u64,
) -> Result<RunOutcome> {
    let p0 = build_initial(
        grid,
        &InitialSpec::GibbsPerturbed {
            noise: config.noise,
        },
        constraints,
        seed,
        config.params.floor,
    )?;
    let start = Instant::now();
    let trajectory = run(&p0, constraints, &config.params)?;
    Ok(RunOutcome {
        seed,
        trajectory,
        elapsed: start.elapsed(),
    })
}

impl ConvergenceRuns {
    pub fn execute(config: SuiteConfig) -> Result<Self> {
        let grid = Arc::new(Grid::uniform(CARRIER.0, CARRIER.1, config.n)?);
        let energy = test_energy(&grid)?;
        let gibbs = gibbs_solve(&energy)?;
        let mut mass_only = Vec::with_capacity(config.runs);
        let mut mass_energy = Vec::with_capacity(config.runs);
        for seed in 0..config.runs as u64 {
            mass_only.push(timed_run(&grid, Constraints::MassOnly, &config, seed)?);
            mass_energy.push(timed_run(
                &grid,
                Constraints::MassEnergy(&energy),
                &config,
                seed,
            )?);
        }
        Ok(Self {
            config,
            grid,
            energy,
            gibbs,
            mass_only,
            mass_energy,
        })
    }

    fn all(&self) -> impl Iterator<Item = (&'static str, &RunOutcome)> {
        self.mass_only
            .iter()
            .map(|r| ("mass-only", r))
            .chain(self.mass_energy.iter().map(|r| ("mass-energy", r)))
    }
}

/// Criterion 1: mass-only runs reach `1/mes(Ω)`.
pub fn uniform_convergence(runs: &ConvergenceRuns) -> CriterionResult {
    let name = "uniform-limit convergence";
    let mut worst = 0.0_f64;
    let mut slowest = Duration::ZERO;
    let mut max_steps = 0;
    let mut ok = !runs.mass_only.is_empty();
    let target = 1.0 / runs.grid.measure();
    for r in &runs.mass_only {
        let t = &r.trajectory;
        let d = t
            .final_density
            .values()
            .iter()
            .fold(0.0_f64, |m, v| m.max((v - target).abs()));
        worst = worst.max(d);
        slowest = slowest.max(r.elapsed);
        max_steps = max_steps.max(t.steps);
        ok &= t.converged && d < tol::UNIFORM_LINF && r.elapsed.as_secs_f64() < tol::RUN_SECONDS;
    }
    CriterionResult::new(
        1,
        name,
        ok,
        format!(
            "{} runs, max L∞ {worst:.3e} (< {:e}), max steps {max_steps}, slowest {:.3}s (< {}s)",
            runs.mass_only.len(),
            tol::UNIFORM_LINF,
            slowest.as_secs_f64(),
            tol::RUN_SECONDS
        ),
    )
}

/// Criterion 2: mass-energy runs reach the Gibbs density, and the flow's
/// multipliers there are `(−Γμ, Γ log C)`.
pub fn gibbs_convergence(runs: &ConvergenceRuns) -> CriterionResult {
    let name = "Gibbs-limit convergence";
    let grid = &runs.grid;
    let star = runs.gibbs.density.values();
    let star_norm = grid.inner(star, star).unwrap_or(f64::NAN).sqrt();
    let gamma = runs.config.params.gamma;
    let (want1, want2) = runs.gibbs.multipliers(gamma);
    let mut worst_rel = 0.0_f64;
    let mut worst_mult = 0.0_f64;
    let mut ok = !runs.mass_energy.is_empty();
    for r in &runs.mass_energy {
        let t = &r.trajectory;
        let diff: Vec<f64> = t
            .final_density
            .values()
            .iter()
            .zip(star)
            .map(|(a, b)| a - b)
            .collect();
        let rel = grid.inner(&diff, &diff).unwrap_or(f64::NAN).sqrt() / star_norm;
        let mult = match lagrange_multipliers(&t.final_density, &runs.energy, gamma) {
            Ok((l1, l2)) => (l1 - want1).abs().max((l2 - want2).abs()),
            Err(_) => f64::INFINITY,
        };
        worst_rel = worst_rel.max(rel);
        worst_mult = worst_mult.max(mult);
        ok &= t.converged && rel < tol::GIBBS_REL_L2 && mult <= tol::MULTIPLIERS;
    }
    CriterionResult::new(
        2,
        name,
        ok,
        format!(
            "{} runs, μ = {:.6}, max rel L2 {worst_rel:.3e} (< {:e}), max multiplier error {worst_mult:.3e} (<= {:e})",
            runs.mass_energy.len(),
            runs.gibbs.mu,
            tol::GIBBS_REL_L2,
            tol::MULTIPLIERS
        ),
    )
}

/// Criterion 3: `V̇ ≤ 1e-9` and `S` non-decreasing at every step.
pub fn lyapunov_monotonicity(runs: &ConvergenceRuns) -> CriterionResult {
    let mut max_vdot = f64::NEG_INFINITY;
    let mut max_drop = 0.0_f64;
    for (_, r) in runs.all() {
        let recs = &r.trajectory.records;
        for rec in recs {
            max_vdot = max_vdot.max(rec.vdot_analytic);
        }
        for w in recs.windows(2) {
            max_drop = max_drop.max(w[0].entropy - w[1].entropy);
        }
    }
    let ok = max_vdot <= tol::MONOTONE && max_drop <= tol::MONOTONE;
    CriterionResult::new(
        3,
        "Lyapunov monotonicity",
        ok,
        format!(
            "max V̇ {max_vdot:.3e}, max entropy drop {max_drop:.3e} (both <= {:e})",
            tol::MONOTONE
        ),
    )
}

/// Criterion 4: finite-difference `dV/dt` against the analytic `V̇`.
pub fn vdot_agreement(runs: &ConvergenceRuns) -> CriterionResult {
    let mut worst_fraction = 1.0_f64;
    let mut worst_label = String::new();
    for (mode, r) in runs.all() {
        let recs = &r.trajectory.records;
        if recs.len() < 3 {
            continue;
        }
        let good = recs
            .iter()
            .filter(|rec| vdot_agrees(rec.vdot_analytic, rec.vdot_numeric))
            .count();
        let fraction = good as f64 / recs.len() as f64;
        if fraction < worst_fraction {
            worst_fraction = fraction;
            worst_label = format!(" ({mode} seed {})", r.seed);
        }
    }
    CriterionResult::new(
        4,
        "analytic vs numeric V̇",
        worst_fraction >= tol::VDOT_FRACTION,
        format!(
            "worst per-run agreement {:.2}%{worst_label} (>= {:.0}%)",
            100.0 * worst_fraction,
            100.0 * tol::VDOT_FRACTION
        ),
    )
}

/// Criterion 5: mass and energy residuals at every step.
pub fn constraint_conservation(runs: &ConvergenceRuns) -> CriterionResult {
    let mut max_mass = 0.0_f64;
    let mut max_energy = 0.0_f64;
    for (_, r) in runs.all() {
        for rec in &r.trajectory.records {
            max_mass = max_mass.max(rec.mass_residual.abs());
        }
    }
    for r in &runs.mass_energy {
        for rec in &r.trajectory.records {
            max_energy = max_energy.max(rec.energy_residual.abs());
        }
    }
    let e = runs.energy.target_energy().abs();
    let ok = max_mass <= tol::MASS && max_energy <= tol::ENERGY_REL * e;
    CriterionResult::new(
        5,
        "constraint conservation",
        ok,
        format!(
            "max |mass − 1| {max_mass:.3e} (<= {:e}), max |energy − E| {max_energy:.3e} (<= {:.1e})",
            tol::MASS,
            tol::ENERGY_REL * e
        ),
    )
}

fn max_gh(t: &Trajectory) -> f64 {
    t.records.iter().fold(0.0_f64, |m, r| m.max(r.gh_moment_k2))
}

/// Criterion 6: `S(p_final) → S(p*)` with `∫p|log p|²` bounded along each
/// run and stable under grid refinement.
pub fn entropy_convergence(runs: &ConvergenceRuns) -> CriterionResult {
    let name = "entropy convergence";
    let mut worst_gap = 0.0_f64;
    let mut finite = true;
    for (_, r) in runs.all() {
        let t = &r.trajectory;
        worst_gap = worst_gap.max((t.final_record().entropy - t.limit_entropy).abs());
        finite &= max_gh(t).is_finite();
    }

    // refinement: same seed, same continuous initial profile, several n
    let mut spreads = Vec::new();
    for mode in ["mass-only", "mass-energy"] {
        let mut maxima = Vec::new();
        for &n in &runs.config.refinement {
            let outcome = Grid::uniform(CARRIER.0, CARRIER.1, n).and_then(|g| {
                let g = Arc::new(g);
                if mode == "mass-only" {
                    timed_run(&g, Constraints::MassOnly, &runs.config, 0)
                } else {
                    let h = test_energy(&g)?;
                    timed_run(&g, Constraints::MassEnergy(&h), &runs.config, 0)
                }
            });
            match outcome {
                Ok(o) => maxima.push(max_gh(&o.trajectory)),
                Err(e) => return CriterionResult::failed(6, name, e),
            }
        }
        let lo = maxima.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = maxima.iter().copied().fold(0.0_f64, f64::max);
        spreads.push((mode, maxima.clone(), (hi - lo) / lo));
    }
    let spread_ok = spreads.iter().all(|(_, _, s)| *s <= tol::GH_SPREAD);
    let ok = finite && worst_gap <= tol::ENTROPY && spread_ok;
    let refinement: Vec<String> = spreads
        .iter()
        .map(|(m, v, s)| format!("{m} sup gh {v:.4?} spread {:.3}%", 100.0 * s))
        .collect();
    CriterionResult::new(
        6,
        name,
        ok,
        format!(
            "max |S − S*| {worst_gap:.3e} (<= {:e}); {} (<= {:.0}%)",
            tol::ENTROPY,
            refinement.join("; "),
            100.0 * tol::GH_SPREAD
        ),
    )
}

fn random_field(rng: &mut ChaCha8Rng, grid: &Arc<Grid>) -> ScalarField {
    // alternate rough node noise and smooth profiles
    let values = if rng.gen_bool(0.5) {
        (0..grid.len()).map(|_| rng.gen_range(-3.0..3.0)).collect()
    } else {
        let (a, b, c): (f64, f64, f64) = (
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.5..6.0),
        );
        grid.sample(|r| a * (c * r).sin() + b * r * r)
    };
    ScalarField::new(grid.clone(), values).expect("finite values")
}

/// Criterion 7: linearity, symmetry, positivity, zero-iff-constant and the
/// Cauchy–Bunyakovsky inequality for the centered bilinear form.
pub fn bilinear_properties(seed: u64, pairs: usize) -> CriterionResult {
    let grid = Arc::new(Grid::uniform(CARRIER.0, CARRIER.1, 64).expect("valid grid"));
    let m = grid.measure();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = |f: &ScalarField, g: &ScalarField| centered_bilinear(f, g).expect("same grid");
    let mut worst = [0.0_f64; 5];
    let mut positivity_ok = true;
    for _ in 0..pairs {
        let f = random_field(&mut rng, &grid);
        let g = random_field(&mut rng, &grid);
        let h = random_field(&mut rng, &grid);
        let alpha: f64 = rng.gen_range(-5.0..5.0);
        let c: f64 = rng.gen_range(-10.0..10.0);

        let combo = ScalarField::new(
            grid.clone(),
            f.values()
                .iter()
                .zip(g.values())
                .map(|(x, y)| alpha * x + y)
                .collect(),
        )
        .expect("finite");
        let lin_scale = m * (alpha.abs() * f.norm() + g.norm()) * h.norm();
        let lin = (b(&combo, &h) - (alpha * b(&f, &h) + b(&g, &h))).abs() / lin_scale;
        let sym_scale = m * f.norm() * g.norm();
        let sym = (b(&f, &g) - b(&g, &f)).abs() / sym_scale;

        let ff = b(&f, &f);
        let gg = b(&g, &g);
        positivity_ok &= ff > 0.0 && gg > 0.0;
        let neg = (-ff).max(0.0) / (m * f.norm() * f.norm());

        let constant = ScalarField::constant(grid.clone(), c).expect("finite");
        let zero = b(&constant, &constant).abs()
            / (m * constant.norm() * constant.norm()).max(f64::MIN_POSITIVE);

        let fg = b(&f, &g);
        let cb = (fg * fg - ff * gg).max(0.0) / (sym_scale * sym_scale);

        for (w, v) in worst.iter_mut().zip([lin, sym, neg, zero, cb]) {
            *w = w.max(v);
        }
    }
    let ok = positivity_ok && worst.iter().all(|&w| w <= tol::BILINEAR);
    CriterionResult::new(
        7,
        "bilinear-form properties",
        ok,
        format!(
            "{pairs} random triples; relative defects: linearity {:.1e}, symmetry {:.1e}, negativity {:.1e}, constant {:.1e}, Cauchy–Bunyakovsky {:.1e} (all <= {:e}); strictly positive on non-constants: {positivity_ok}",
            worst[0], worst[1], worst[2], worst[3], worst[4], tol::BILINEAR
        ),
    )
}

fn random_density(rng: &mut ChaCha8Rng, grid: &Arc<Grid>) -> crate::density::DensityField {
    let coeffs: Vec<f64> = (0..5).map(|_| rng.gen_range(-0.6..0.6)).collect();
    let raw = grid.sample(|r| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 1) as f64 * 1.3 * r).sin())
            .sum::<f64>()
            .exp()
    });
    project_mass(grid.clone(), &raw, crate::density::DEFAULT_FLOOR).expect("positive profile")
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Criterion 8: multiplier form and operator form of the right-hand side
/// coincide, and `Ψ` is idempotent.
pub fn form_equivalence(seed: u64, samples: usize) -> CriterionResult {
    let name = "λ-form vs Ψ-form";
    let grid = Arc::new(Grid::uniform(CARRIER.0, CARRIER.1, 200).expect("valid grid"));
    let h = match test_energy(&grid) {
        Ok(h) => h,
        Err(e) => return CriterionResult::failed(8, name, e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_form = 0.0_f64;
    let mut worst_idem = 0.0_f64;
    for _ in 0..samples {
        let p = random_density(&mut rng, &grid);
        let gamma: f64 = rng.gen_range(0.2..3.0);
        let pairs = [
            (
                rhs_mass_only(&p, gamma),
                flow(&p, Constraints::MassOnly, gamma),
            ),
            (
                rhs_mass_energy(&p, &h, gamma).expect("non-degenerate h"),
                flow(&p, Constraints::MassEnergy(&h), gamma),
            ),
        ];
        for (lambda_form, op_form) in pairs {
            match op_form {
                Ok(op) => worst_form = worst_form.max(linf(lambda_form.values(), op.values())),
                Err(e) => return CriterionResult::failed(8, name, e),
            }
        }
        let f = random_field(&mut rng, &grid);
        for mode in [Constraints::MassOnly, Constraints::MassEnergy(&h)] {
            let once = apply_psi(&f, mode).expect("same grid");
            let twice = apply_psi(&once, mode).expect("same grid");
            worst_idem = worst_idem.max(linf(once.values(), twice.values()));
        }
    }
    CriterionResult::new(
        8,
        name,
        worst_form <= tol::FORMS && worst_idem <= tol::IDEMPOTENT,
        format!(
            "{samples} random densities; max node-wise form gap {worst_form:.2e} (<= {:e}), max ‖Ψ²f − Ψf‖∞ {worst_idem:.2e} (<= {:e})",
            tol::FORMS,
            tol::IDEMPOTENT
        ),
    )
}

/// Orthogonal complement projection in the weighted inner product, by
/// modified Gram–Schmidt over `basis`; independent of `Psi`.
fn project_out(grid: &Grid, v: &mut [f64], basis: &[Vec<f64>]) {
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for b in basis {
        let mut e = b.clone();
        for q in &ortho {
            let c = grid.dot(&e, q);
            e.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
        let norm = grid.dot(&e, &e).sqrt();
        e.iter_mut().for_each(|x| *x /= norm);
        ortho.push(e);
    }
    for q in &ortho {
        let c = grid.dot(v, q);
        v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
    }
}

/// Criterion 9: the flow points along the admissible gradient of entropy.
///
/// The `L²` gradient of `S` is estimated coordinate by coordinate with
/// central differences of step [`tol::SG_STEP`], projected onto the
/// admissible directions (`∫δ = 0`, plus `∫δh = 0` with energy), and
/// compared in angle with the flow field.
pub fn speed_gradient(seed: u64, states: usize) -> CriterionResult {
    let name = "speed-gradient direction";
    let grid = Arc::new(Grid::uniform(CARRIER.0, CARRIER.1, 80).expect("valid grid"));
    let h = match test_energy(&grid) {
        Ok(h) => h,
        Err(e) => return CriterionResult::failed(9, name, e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = tol::SG_STEP;
    let mut worst = f64::INFINITY;
    for _ in 0..states {
        let p = random_density(&mut rng, &grid);
        for mode in [Constraints::MassOnly, Constraints::MassEnergy(&h)] {
            let mut grad: Vec<f64> = (0..grid.len())
                .map(|i| {
                    let mut plus = p.values().to_vec();
                    let mut minus = p.values().to_vec();
                    plus[i] += eps;
                    minus[i] -= eps;
                    let sp = entropy_of_values(&grid, &plus).expect("positive");
                    let sm = entropy_of_values(&grid, &minus).expect("positive");
                    (sp - sm) / (2.0 * eps) / grid.weights()[i]
                })
                .collect();
            let mut basis = vec![vec![1.0; grid.len()]];
            if let Constraints::MassEnergy(h) = mode {
                basis.push(h.values().to_vec());
            }
            project_out(&grid, &mut grad, &basis);
            let u = match flow(&p, mode, 1.0) {
                Ok(u) => u,
                Err(e) => return CriterionResult::failed(9, name, e),
            };
            let cos = grid.dot(&grad, u.values()) / (grid.dot(&grad, &grad).sqrt() * u.norm());
            worst = worst.min(cos);
        }
    }
    CriterionResult::new(
        9,
        name,
        worst >= tol::SG_COSINE,
        format!(
            "{states} random states × 2 constraint sets, min cosine {worst:.9} (>= {})",
            tol::SG_COSINE
        ),
    )
}

/// Criterion 10: the general dual solver against the Gibbs root-finder and
/// the unconstrained uniform limit.
pub fn maxent_cross_oracle() -> CriterionResult {
    let name = "MaxEnt solver cross-oracle";
    let grid = Arc::new(Grid::uniform(CARRIER.0, CARRIER.1, 500).expect("valid grid"));
    let mut worst = 0.0_f64;
    let cases: [(&dyn Fn(f64) -> f64, f64); 4] = [
        (&|r| r, 0.9),
        (&|r| r, 0.3),
        (&|r| r, 1.6),
        (&|r| r * r, 1.0),
    ];
    for (hf, e) in cases {
        let res = EnergyDensity::from_fn(grid.clone(), hf, e).and_then(|h| {
            let g = gibbs_solve(&h)?;
            let j = jaynes_maxent(&grid, &[MomentConstraint::new(h.field().clone(), e)])?;
            Ok(linf(g.density.values(), j.density.values()))
        });
        match res {
            Ok(d) => worst = worst.max(d),
            Err(err) => return CriterionResult::failed(10, name, err),
        }
    }
    let exact_uniform = match jaynes_maxent(&grid, &[]) {
        Ok(sol) => sol.density == uniform_limit(&grid),
        Err(err) => return CriterionResult::failed(10, name, err),
    };
    CriterionResult::new(
        10,
        name,
        worst <= tol::JAYNES_LINF && exact_uniform,
        format!(
            "max L∞ Jaynes vs Gibbs {worst:.2e} over 4 energy constraints (<= {:e}); M = 0 equals uniform exactly: {exact_uniform}",
            tol::JAYNES_LINF
        ),
    )
}

/// Run every criterion in order.
pub fn run_all(config: SuiteConfig) -> Vec<CriterionResult> {
    let mut out = Vec::with_capacity(10);
    match ConvergenceRuns::execute(config) {
        Ok(runs) => {
            out.push(uniform_convergence(&runs));
            out.push(gibbs_convergence(&runs));
            out.push(lyapunov_monotonicity(&runs));
            out.push(vdot_agreement(&runs));
            out.push(constraint_conservation(&runs));
            out.push(entropy_convergence(&runs));
        }
        Err(e) => {
            let names = [
                "uniform-limit convergence",
                "Gibbs-limit convergence",
                "Lyapunov monotonicity",
                "analytic vs numeric V̇",
                "constraint conservation",
                "entropy convergence",
            ];
            for (i, n) in names.into_iter().enumerate() {
                out.push(CriterionResult::failed(i as u8 + 1, n, &e));
            }
        }
    }
    out.push(bilinear_properties(7, 1000));
    out.push(form_equivalence(8, 100));
    out.push(speed_gradient(9, 20));
    out.push(maxent_cross_oracle());
    out
}

/// Check a trajectory's recorded `gh` maximum against a direct recomputation
/// on its final state (both must be finite).
pub fn gh_is_finite(t: &Trajectory) -> bool {
    max_gh(t).is_finite()
        && gh_moment(&t.final_density, DEFAULT_GH_EXPONENT)
            .map(f64::is_finite)
            .unwrap_or(false)
}
