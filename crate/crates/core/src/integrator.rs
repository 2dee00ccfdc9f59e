//! Explicit time stepping of the density flow.
//!
//! Each step is a classical four-stage Runge–Kutta update of
//! `ṗ = −Γ(I − Ψ) log p` followed by a re-projection onto the constraint
//! set: multiplicative rescaling for the mass constraint, or an additive
//! correction in `span{1, h̃}` when energy is conserved as well.

use std::sync::Arc;

use crate::density::{project_mass, same_grid, DensityField};
use crate::diagnostics::{
    angle_between, distances, fill_numeric_vdot, gh_moment, vdot_mass_energy, vdot_mass_only,
    TrajectoryRecord, DEFAULT_GH_EXPONENT,
};
use crate::dynamics::{Constraints, EnergyDensity, Psi, SgParams};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::maxent::{gibbs_solve, uniform_limit};

/// Upper bound on stored snapshots when `SgParams::stride` is unset.
pub const MAX_SNAPSHOTS: usize = 1000;

/// Residual below which a state is returned untouched by re-projection.
const IDEMPOTENCE_SLACK: f64 = 1e-14;

/// Constraint residual accepted on an initial density.
pub const INITIAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub density: DensityField,
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Strided state snapshots; the first and last step are always kept.
    pub snapshots: Vec<Snapshot>,
    /// One record per step, including step 0.
    pub records: Vec<TrajectoryRecord>,
    pub final_density: DensityField,
    /// Stationary density the run is measured against.
    pub limit: DensityField,
    pub limit_entropy: f64,
    /// Number of steps taken.
    pub steps: usize,
    pub converged: bool,
    /// `‖rhs‖_∞` at the final state.
    pub final_rhs_norm: f64,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.t)
    }

    pub fn final_record(&self) -> &TrajectoryRecord {
        self.records
            .last()
            .expect("trajectory has at least one record")
    }
}

/// Reusable buffers and the projection operator for one run.
struct Stepper<'a> {
    psi: Psi,
    constraints: Constraints<'a>,
    gamma: f64,
    dt: f64,
    floor: f64,
    log_buf: Vec<f64>,
    stage: Vec<f64>,
    k: [Vec<f64>; 4],
}

impl<'a> Stepper<'a> {
    fn new(grid: &Arc<Grid>, constraints: Constraints<'a>, params: &SgParams) -> Result<Self> {
        let n = grid.len();
        Ok(Self {
            psi: Psi::new(grid.clone(), constraints)?,
            constraints,
            gamma: params.gamma,
            dt: params.dt,
            floor: params.floor,
            log_buf: vec![0.0; n],
            stage: vec![0.0; n],
            k: std::array::from_fn(|_| vec![0.0; n]),
        })
    }

    fn eval(&mut self, which: usize, stage_no: usize, use_stage: bool, p: &[f64]) -> Result<()> {
        let src = if use_stage { &self.stage } else { p };
        self.psi
            .flow_into(src, self.gamma, &mut self.log_buf, &mut self.k[which])
            .map_err(|_| Error::StepInstability { stage: stage_no })
    }

    fn advance(&mut self, p: &DensityField) -> Result<DensityField> {
        let x = p.values();
        let dt = self.dt;
        self.eval(0, 1, false, x)?;
        for (s, (xi, ki)) in self.stage.iter_mut().zip(x.iter().zip(&self.k[0])) {
            *s = xi + 0.5 * dt * ki;
        }
        self.eval(1, 2, true, x)?;
        for (s, (xi, ki)) in self.stage.iter_mut().zip(x.iter().zip(&self.k[1])) {
            *s = xi + 0.5 * dt * ki;
        }
        self.eval(2, 3, true, x)?;
        for (s, (xi, ki)) in self.stage.iter_mut().zip(x.iter().zip(&self.k[2])) {
            *s = xi + dt * ki;
        }
        self.eval(3, 4, true, x)?;
        let [k1, k2, k3, k4] = &self.k;
        let next: Vec<f64> = (0..x.len())
            .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepInstability { stage: 5 });
        }
        project_onto_constraints(p.grid().clone(), next, self.constraints, self.floor)
    }
}

/// Map raw values onto `{p ≥ floor, ∫p = 1}` (and `∫ph = E` when energy is
/// constrained).
///
/// The energy case adds `α·1 + β·h̃` with `(α, β)` restoring both
/// constraints, clips to the floor, and re-solves once if clipping happened.
pub fn project_onto_constraints(
    grid: Arc<Grid>,
    mut values: Vec<f64>,
    constraints: Constraints<'_>,
    floor: f64,
) -> Result<DensityField> {
    let h = match constraints {
        Constraints::MassOnly => return project_mass(grid, &values, floor),
        Constraints::MassEnergy(h) => h,
    };
    if !same_grid(&grid, h.grid()) {
        return Err(Error::GridMismatch);
    }
    grid.check_len(&values)?;
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, value });
    }
    if !(floor.is_finite() && floor > 0.0) {
        return Err(Error::InvalidParams(format!(
            "floor must be > 0, got {floor}"
        )));
    }
    let feasible = (grid.sum(&values) - 1.0).abs() <= IDEMPOTENCE_SLACK
        && (grid.dot(&values, h.values()) - h.target_energy()).abs()
            <= IDEMPOTENCE_SLACK * h.target_energy().abs().max(1.0);
    if feasible && values.iter().all(|&v| v >= floor) {
        return Ok(DensityField::from_parts(grid, values, floor));
    }
    correct_affine(&grid, &mut values, h);
    if values.iter().any(|&v| v < floor) {
        values.iter_mut().for_each(|v| *v = v.max(floor));
        correct_affine(&grid, &mut values, h);
        if values.iter().any(|&v| v < floor) {
            return Err(Error::ProjectionInfeasible);
        }
    }
    Ok(DensityField::from_parts(grid, values, floor))
}

fn correct_affine(grid: &Grid, values: &mut [f64], h: &EnergyDensity) {
    let ht = h.centered_values();
    let hv = h.values();
    let a11 = grid.measure();
    let a12 = grid.sum(ht);
    let a21 = grid.sum(hv);
    let a22 = grid.dot(ht, hv);
    let r1 = 1.0 - grid.sum(values);
    let r2 = h.target_energy() - grid.dot(values, hv);
    let det = a11 * a22 - a12 * a21;
    let alpha = (r1 * a22 - a12 * r2) / det;
    let beta = (a11 * r2 - a21 * r1) / det;
    for (v, t) in values.iter_mut().zip(ht) {
        *v += alpha + beta * t;
    }
}

/// One RK4 step followed by constraint re-projection.
pub fn step(
    p: &DensityField,
    constraints: Constraints<'_>,
    params: &SgParams,
) -> Result<DensityField> {
    params.validate()?;
    Stepper::new(p.grid(), constraints, params)?.advance(p)
}

/// Stationary density and its entropy for the active constraints.
pub fn limit_density(grid: &Arc<Grid>, constraints: Constraints<'_>) -> Result<DensityField> {
    match constraints {
        Constraints::MassOnly => Ok(uniform_limit(grid)),
        Constraints::MassEnergy(h) => Ok(gibbs_solve(h)?.density),
    }
}

fn check_initial(p0: &DensityField, constraints: Constraints<'_>) -> Result<()> {
    let mass = p0.mass();
    if (mass - 1.0).abs() > INITIAL_TOLERANCE {
        return Err(Error::ConstraintViolation(format!("initial mass {mass}")));
    }
    if let Constraints::MassEnergy(h) = constraints {
        if !same_grid(p0.grid(), h.grid()) {
            return Err(Error::GridMismatch);
        }
        let e = p0.expectation(h.values())?;
        let target = h.target_energy();
        if (e - target).abs() > INITIAL_TOLERANCE * target.abs().max(1.0) {
            return Err(Error::ConstraintViolation(format!(
                "initial energy {e} differs from target {target}"
            )));
        }
    }
    Ok(())
}

struct Recorder<'a> {
    constraints: Constraints<'a>,
    gamma: f64,
    limit: DensityField,
    limit_log: Vec<f64>,
    s_max: f64,
}

impl Recorder<'_> {
    fn record(&self, t: f64, p: &DensityField) -> Result<TrajectoryRecord> {
        let grid = p.grid();
        let entropy = p.entropy()?;
        let vdot_analytic = match self.constraints {
            Constraints::MassOnly => vdot_mass_only(p, self.gamma),
            Constraints::MassEnergy(h) => vdot_mass_energy(p, h, self.gamma)?,
        };
        let energy_residual = match self.constraints {
            Constraints::MassOnly => f64::NAN,
            Constraints::MassEnergy(h) => p.expectation(h.values())? - h.target_energy(),
        };
        let (dist_l2, dist_linf) = distances(p.values(), self.limit.values(), grid.weights());
        let angle = angle_between(grid, &p.log_values(), &self.limit_log).unwrap_or(f64::NAN);
        Ok(TrajectoryRecord {
            t,
            entropy,
            lyapunov: self.s_max - entropy,
            vdot_analytic,
            vdot_numeric: f64::NAN,
            mass_residual: p.mass() - 1.0,
            energy_residual,
            dist_l2,
            dist_linf,
            angle,
            gh_moment_k2: gh_moment(p, DEFAULT_GH_EXPONENT)?,
        })
    }
}

/// Integrate from `p0` until `‖rhs‖_∞ < stop_tol` or `max_steps` steps.
///
/// Not reaching the tolerance is reported through `converged = false`,
/// not as an error.
pub fn run(
    p0: &DensityField,
    constraints: Constraints<'_>,
    params: &SgParams,
) -> Result<Trajectory> {
    params.validate()?;
    check_initial(p0, constraints)?;
    let grid = p0.grid().clone();
    let mut warnings = Vec::new();
    if let Some(w) = params.stability_warning() {
        warnings.push(w);
    }

    let limit = limit_density(&grid, constraints)?;
    let s_max = limit.entropy()?;
    let recorder = Recorder {
        constraints,
        gamma: params.gamma,
        limit_log: limit.log_values(),
        limit,
        s_max,
    };

    let stride = params
        .stride
        .unwrap_or_else(|| (params.max_steps / MAX_SNAPSHOTS).max(1));
    let mut stepper = Stepper::new(&grid, constraints, params)?;
    let mut p = project_onto_constraints(
        grid.clone(),
        p0.values().to_vec(),
        constraints,
        params.floor,
    )?;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut step_no = 0usize;
    let mut rhs = vec![0.0; grid.len()];
    let mut log_buf = vec![0.0; grid.len()];
    let (converged, final_rhs_norm) = loop {
        let t = step_no as f64 * params.dt;
        records.push(recorder.record(t, &p)?);
        stepper
            .psi
            .flow_into(p.values(), params.gamma, &mut log_buf, &mut rhs)
            .map_err(|_| Error::StepInstability { stage: 0 })?;
        let norm = rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let done = norm < params.stop_tol;
        if step_no.is_multiple_of(stride) || done || step_no == params.max_steps {
            snapshots.push(Snapshot {
                step: step_no,
                t,
                density: p.clone(),
            });
        }
        if done {
            break (true, norm);
        }
        if step_no == params.max_steps {
            break (false, norm);
        }
        p = stepper.advance(&p)?;
        step_no += 1;
    };
    fill_numeric_vdot(&mut records);

    Ok(Trajectory {
        snapshots,
        records,
        final_density: p,
        limit_entropy: s_max,
        limit: recorder.limit,
        steps: step_no,
        converged,
        final_rhs_norm,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DEFAULT_FLOOR;
    use crate::dynamics::flow;
    use std::f64::consts::PI;

    fn grid(a: f64, b: f64, n: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform(a, b, n).unwrap())
    }

    fn linf(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    fn params(dt: f64) -> SgParams {
        SgParams {
            dt,
            ..SgParams::default()
        }
    }

    #[test]
    fn uniform_is_unchanged_by_a_step() {
        let g = grid(0.0, 2.0, 100);
        let p = uniform_limit(&g);
        let q = step(&p, Constraints::MassOnly, &params(0.1)).unwrap();
        assert!(linf(p.values(), q.values()) < 1e-14);
    }

    #[test]
    fn gibbs_is_unchanged_by_a_step() {
        let g = grid(0.0, 2.0, 100);
        let h = EnergyDensity::from_fn(g, |r| r, 0.9).unwrap();
        let p = gibbs_solve(&h).unwrap().density;
        let q = step(&p, Constraints::MassEnergy(&h), &params(0.1)).unwrap();
        assert!(linf(p.values(), q.values()) < 1e-12);
    }

    #[test]
    fn tiny_step_matches_euler() {
        let g = grid(0.0, 2.0, 100);
        let p = project_mass(
            g.clone(),
            &g.sample(|r| 1.0 + 0.5 * (PI * r).sin()),
            DEFAULT_FLOOR,
        )
        .unwrap();
        let dt = 1e-6;
        let q = step(&p, Constraints::MassOnly, &params(dt)).unwrap();
        let u = flow(&p, Constraints::MassOnly, 1.0).unwrap();
        let euler: Vec<f64> = p
            .values()
            .iter()
            .zip(u.values())
            .map(|(a, b)| a + dt * b)
            .collect();
        // difference is the dt²/2·p̈ term
        assert!(linf(q.values(), &euler) < 10.0 * dt * dt);
    }

    #[test]
    fn fourth_order_convergence() {
        let g = grid(0.0, 2.0, 60);
        let h = EnergyDensity::from_fn(g.clone(), |r| r, 0.9).unwrap();
        let p0 = project_onto_constraints(
            g.clone(),
            g.sample(|r| 0.5 + 0.15 * (PI * r).cos() - 0.15 * (r - 1.0)),
            Constraints::MassEnergy(&h),
            DEFAULT_FLOOR,
        )
        .unwrap();
        let horizon = 0.8;
        let integrate = |dt: f64| {
            let prm = params(dt);
            let mut p = p0.clone();
            let steps = (horizon / dt).round() as usize;
            for _ in 0..steps {
                p = step(&p, Constraints::MassEnergy(&h), &prm).unwrap();
            }
            p
        };
        let reference = integrate(0.8 / 1024.0);
        let e1 = linf(integrate(0.2).values(), reference.values());
        let e2 = linf(integrate(0.1).values(), reference.values());
        let ratio = e1 / e2;
        assert!(
            (12.0..20.0).contains(&ratio),
            "ratio {ratio}, e1 {e1:e}, e2 {e2:e}"
        );
    }

    #[test]
    fn energy_projection_restores_both_constraints() {
        let g = grid(0.0, 2.0, 200);
        let h = EnergyDensity::from_fn(g.clone(), |r| r * r, 1.1).unwrap();
        let p = project_onto_constraints(
            g.clone(),
            g.sample(|r| 0.7 + 0.1 * r),
            Constraints::MassEnergy(&h),
            DEFAULT_FLOOR,
        )
        .unwrap();
        assert!((p.mass() - 1.0).abs() < 1e-13);
        assert!((p.expectation(h.values()).unwrap() - 1.1).abs() < 1e-13);
    }

    #[test]
    fn energy_projection_can_be_infeasible() {
        let g = grid(0.0, 2.0, 200);
        let h = EnergyDensity::from_fn(g.clone(), |r| r, 1.98).unwrap();
        let res = project_onto_constraints(
            g.clone(),
            vec![0.5; 200],
            Constraints::MassEnergy(&h),
            DEFAULT_FLOOR,
        );
        assert_eq!(res, Err(Error::ProjectionInfeasible));
    }

    #[test]
    fn huge_step_is_reported() {
        let g = grid(0.0, 2.0, 50);
        let p = project_mass(g.clone(), &g.sample(|r| 0.05 + r * r), DEFAULT_FLOOR).unwrap();
        let prm = SgParams {
            dt: 50.0,
            ..SgParams::default()
        };
        assert!(matches!(
            step(&p, Constraints::MassOnly, &prm),
            Err(Error::StepInstability { .. })
        ));
    }

    #[test]
    fn uniform_run_converges_immediately() {
        let g = grid(0.0, 2.0, 100);
        let traj = run(
            &uniform_limit(&g),
            Constraints::MassOnly,
            &SgParams::default(),
        )
        .unwrap();
        assert!(traj.converged);
        assert_eq!(traj.steps, 0);
        assert_eq!(traj.records.len(), 1);
        assert_eq!(traj.final_record().dist_linf, 0.0);
    }

    #[test]
    fn sine_run_reaches_uniform() {
        let g = grid(0.0, 2.0, 200);
        let p0 = project_mass(
            g.clone(),
            &g.sample(|r| 1.0 + 0.5 * (PI * r).sin()),
            DEFAULT_FLOOR,
        )
        .unwrap();
        let prm = SgParams {
            dt: 0.01,
            ..SgParams::default()
        };
        let traj = run(&p0, Constraints::MassOnly, &prm).unwrap();
        assert!(traj.converged);
        assert!(traj.final_record().dist_linf < 1e-6);
        for w in traj.records.windows(2) {
            assert!(w[1].entropy >= w[0].entropy - 1e-9);
            assert!(w[1].t > w[0].t);
        }
        for r in &traj.records {
            assert!(r.mass_residual.abs() <= 1e-10);
            assert!(r.vdot_analytic <= 1e-9);
            assert!(r.lyapunov >= -1e-9);
        }
        // the angle between log p and log p* goes to zero
        let first = traj.records[1].angle;
        let last = traj.final_record().angle;
        assert!(last < first && last < 1e-6);
        assert_eq!(traj.snapshots.first().unwrap().step, 0);
        assert_eq!(traj.snapshots.last().unwrap().step, traj.steps);
    }

    #[test]
    fn non_convergence_is_not_an_error() {
        let g = grid(0.0, 2.0, 50);
        let p0 = project_mass(g.clone(), &g.sample(|r| 1.0 + 0.5 * r), DEFAULT_FLOOR).unwrap();
        let prm = SgParams {
            max_steps: 5,
            stride: Some(2),
            ..SgParams::default()
        };
        let traj = run(&p0, Constraints::MassOnly, &prm).unwrap();
        assert!(!traj.converged);
        assert_eq!(traj.steps, 5);
        assert_eq!(traj.records.len(), 6);
        let stored: Vec<usize> = traj.snapshots.iter().map(|s| s.step).collect();
        assert_eq!(stored, vec![0, 2, 4, 5]);
    }

    #[test]
    fn run_rejects_off_surface_initial() {
        let g = grid(0.0, 2.0, 50);
        let h = EnergyDensity::from_fn(g.clone(), |r| r, 0.9).unwrap();
        let res = run(
            &uniform_limit(&g),
            Constraints::MassEnergy(&h),
            &SgParams::default(),
        );
        assert!(matches!(res, Err(Error::ConstraintViolation(_))));
    }

    #[test]
    fn two_initials_share_a_limit() {
        let g = grid(0.0, 2.0, 120);
        let h = EnergyDensity::from_fn(g.clone(), |r| r, 0.9).unwrap();
        let c = Constraints::MassEnergy(&h);
        let prm = SgParams {
            dt: 0.01,
            ..SgParams::default()
        };
        let a = project_onto_constraints(
            g.clone(),
            g.sample(|r| 0.5 + 0.2 * (3.0 * r).sin()),
            c,
            DEFAULT_FLOOR,
        )
        .unwrap();
        let b = project_onto_constraints(
            g.clone(),
            g.sample(|r| 0.5 - 0.2 * (2.0 * r).cos()),
            c,
            DEFAULT_FLOOR,
        )
        .unwrap();
        let ta = run(&a, c, &prm).unwrap();
        let tb = run(&b, c, &prm).unwrap();
        assert!(ta.converged && tb.converged);
        let d = linf(ta.final_density.values(), tb.final_density.values());
        // ‖rhs‖ < tol ⇒ |p − p*| ≲ tol·max p / Γ on each run
        assert!(d < 2.0 * prm.stop_tol, "{d:e}");
    }
}
