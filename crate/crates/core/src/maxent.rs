//! Stationary maximum-entropy densities, computed without reference to the
//! dynamics: the uniform density, the Gibbs density for a single energy
//! constraint, and the general moment-constrained exponential family.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::density::{same_grid, DensityField, ScalarField, DEFAULT_FLOOR};
use crate::dynamics::EnergyDensity;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Targets must sit this far (relative to the observable range) inside the
/// achievable interval.
pub const FEASIBILITY_MARGIN: f64 = 1e-9;

/// Residual accepted for moment constraints.
pub const MOMENT_TOLERANCE: f64 = 1e-8;

const BISECTION_WIDTH: f64 = 1e-6;
const MAX_NEWTON_ITERATIONS: usize = 50;

/// Constant density `1 / mes(Ω)`.
pub fn uniform_limit(grid: &Arc<Grid>) -> DensityField {
    let value = 1.0 / grid.measure();
    DensityField::from_parts(grid.clone(), vec![value; grid.len()], DEFAULT_FLOOR)
}

/// `p* = C e^{−μ h}` with `∫p* = 1` and `∫p* h = E`.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsSolution {
    pub mu: f64,
    pub c: f64,
    /// `log C`, kept separately because `C` overflows for large `|μ|`.
    pub log_c: f64,
    pub density: DensityField,
}

impl GibbsSolution {
    /// Multipliers `(λ₁, λ₂) = (−Γμ, Γ log C)` the dynamics take at `p*`.
    pub fn multipliers(&self, gamma: f64) -> (f64, f64) {
        (-gamma * self.mu, gamma * self.log_c)
    }
}

/// Log-partition `log ∫ e^{−μh}` and the mean/variance of `h` under the
/// normalized weight, evaluated with a shift that keeps exponents ≤ 0.
struct Tilt {
    log_z: f64,
    mean: f64,
    var: f64,
}

fn tilt(grid: &Grid, h: &[f64], mu: f64) -> Tilt {
    let exps = h.iter().map(|&v| -mu * v);
    let shift = exps.clone().fold(f64::NEG_INFINITY, f64::max);
    let (mut s0, mut s1) = (0.0, 0.0);
    for ((w, &hv), e) in grid.weights().iter().zip(h).zip(exps) {
        let q = w * (e - shift).exp();
        s0 += q;
        s1 += q * hv;
    }
    let mean = s1 / s0;
    // second pass for the variance avoids E[h²] − E[h]² cancellation
    let mut sv = 0.0;
    for (w, &hv) in grid.weights().iter().zip(h) {
        let q = w * (-mu * hv - shift).exp();
        sv += q * (hv - mean) * (hv - mean);
    }
    Tilt {
        log_z: shift + s0.ln(),
        mean,
        var: sv / s0,
    }
}

/// Gibbs density matching the target energy of `h`.
///
/// Bracketed bisection on the (strictly decreasing) energy curve `g(μ)`
/// until the bracket is narrower than 1e-6, then safeguarded Newton steps.
pub fn gibbs_solve(h: &EnergyDensity) -> Result<GibbsSolution> {
    h.check_target()?;
    let grid = h.grid();
    let hv = h.values();
    let target = h.target_energy();
    let g = |mu: f64| tilt(grid, hv, mu).mean;

    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    let mut expansions = 0;
    while g(hi) > target {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 1100 {
            return Err(Error::InfeasibleConstraints("could not bracket μ".into()));
        }
    }
    while g(lo) < target {
        hi = lo;
        lo *= 2.0;
        expansions += 1;
        if expansions > 1100 {
            return Err(Error::InfeasibleConstraints("could not bracket μ".into()));
        }
    }

    while hi - lo > BISECTION_WIDTH * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let tol = 1e-10 * target.abs().max(1.0);
    let mut mu = 0.5 * (lo + hi);
    let mut best = (f64::INFINITY, mu);
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let t = tilt(grid, hv, mu);
        let resid = t.mean - target;
        if resid.abs() < best.0 {
            best = (resid.abs(), mu);
        }
        if resid.abs() <= 1e-4 * tol {
            break;
        }
        if resid > 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        // g'(μ) = −Var(h)
        let next = mu + resid / t.var;
        let next = if next.is_finite() && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if next == mu {
            break;
        }
        mu = next;
    }
    let (resid, mu) = best;
    if resid > tol {
        return Err(Error::InfeasibleConstraints(format!(
            "energy residual {resid:e} above {tol:e}"
        )));
    }

    let log_z = tilt(grid, hv, mu).log_z;
    let log_c = -log_z;
    let mut values: Vec<f64> = hv.iter().map(|&v| (log_c - mu * v).exp()).collect();
    let mut clipped = false;
    for v in values.iter_mut() {
        if *v < DEFAULT_FLOOR {
            *v = DEFAULT_FLOOR;
            clipped = true;
        }
    }
    let density = if clipped {
        crate::density::project_mass(grid.clone(), &values, DEFAULT_FLOOR)?
    } else {
        DensityField::from_parts(grid.clone(), values, DEFAULT_FLOOR)
    };
    Ok(GibbsSolution {
        mu,
        c: log_c.exp(),
        log_c,
        density,
    })
}

/// Energy curve `g(μ) = ∫h e^{−μh} / ∫e^{−μh}` on the grid of `h`.
pub fn gibbs_energy(h: &EnergyDensity, mu: f64) -> f64 {
    tilt(h.grid(), h.values(), mu).mean
}

/// Constraint `∫ H(x) p(x) dx = target`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentConstraint {
    pub observable: ScalarField,
    pub target: f64,
}

impl MomentConstraint {
    pub fn new(observable: ScalarField, target: f64) -> Self {
        Self { observable, target }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntSolution {
    pub density: DensityField,
    /// `λ_m` in `p ∝ exp(−Σ λ_m H_m)`.
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    /// Largest absolute moment residual at the returned multipliers.
    pub residual: f64,
}

struct DualPoint {
    value: f64,
    log_z: f64,
    moments: DVector<f64>,
    cov: DMatrix<f64>,
}

fn dual_point(
    grid: &Grid,
    obs: &[&[f64]],
    targets: &DVector<f64>,
    lambda: &DVector<f64>,
) -> DualPoint {
    let n = grid.len();
    let m = obs.len();
    let exps: Vec<f64> = (0..n)
        .map(|i| -(0..m).map(|k| lambda[k] * obs[k][i]).sum::<f64>())
        .collect();
    let shift = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let q: Vec<f64> = grid
        .weights()
        .iter()
        .zip(&exps)
        .map(|(w, e)| w * (e - shift).exp())
        .collect();
    let s: f64 = q.iter().sum();
    let log_z = shift + s.ln();
    let moments = DVector::from_fn(m, |k, _| {
        q.iter().zip(obs[k]).map(|(qi, h)| qi * h).sum::<f64>() / s
    });
    let cov = DMatrix::from_fn(m, m, |a, b| {
        q.iter()
            .zip(obs[a].iter().zip(obs[b]))
            .map(|(qi, (ha, hb))| qi * (ha - moments[a]) * (hb - moments[b]))
            .sum::<f64>()
            / s
    });
    DualPoint {
        value: log_z + lambda.dot(targets),
        log_z,
        moments,
        cov,
    }
}

/// Maximum-entropy density under moment constraints, by damped Newton
/// iterations on the convex dual `log Z(λ) + Σ λ_m H̄_m`.
pub fn jaynes_maxent(grid: &Arc<Grid>, constraints: &[MomentConstraint]) -> Result<MaxEntSolution> {
    if constraints.is_empty() {
        return Ok(MaxEntSolution {
            density: uniform_limit(grid),
            multipliers: Vec::new(),
            iterations: 0,
            residual: 0.0,
        });
    }
    for c in constraints {
        if !same_grid(grid, c.observable.grid()) {
            return Err(Error::GridMismatch);
        }
        if !c.target.is_finite() {
            return Err(Error::InfeasibleConstraints(format!(
                "non-finite target {}",
                c.target
            )));
        }
    }
    let obs: Vec<&[f64]> = constraints.iter().map(|c| c.observable.values()).collect();
    for (k, c) in constraints.iter().enumerate() {
        let lo = obs[k].iter().copied().fold(f64::INFINITY, f64::min);
        let hi = obs[k].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        if range.is_nan() || range <= 1e-12 * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE) {
            return Err(Error::SingularHessian);
        }
        let margin = FEASIBILITY_MARGIN * range;
        if !(c.target > lo + margin && c.target < hi - margin) {
            return Err(Error::InfeasibleConstraints(format!(
                "target {} of constraint {k} not inside ({lo}, {hi})",
                c.target
            )));
        }
    }

    let m = constraints.len();
    let targets = DVector::from_iterator(m, constraints.iter().map(|c| c.target));
    let mut lambda = DVector::zeros(m);
    let mut point = dual_point(grid, &obs, &targets, &lambda);

    let eig = point.cov.clone().symmetric_eigen();
    let max_eig = eig.eigenvalues.max();
    let min_eig = eig.eigenvalues.min();
    if !(max_eig > 0.0 && min_eig > 1e-12 * max_eig) {
        return Err(Error::SingularHessian);
    }

    let scale = targets.iter().fold(1.0_f64, |s, t| s.max(t.abs()));
    let fine_tol = 1e-14 * scale;
    let mut iterations = 0;
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let grad = &targets - &point.moments;
        if grad.amax() <= fine_tol {
            break;
        }
        let Some(chol) = point.cov.clone().cholesky() else {
            return Err(Error::InfeasibleConstraints(
                "dual Hessian lost definiteness".into(),
            ));
        };
        let step = chol.solve(&grad);
        iterations += 1;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &lambda - t * &step;
            let cand = dual_point(grid, &obs, &targets, &trial);
            if cand.value.is_finite() && cand.value <= point.value {
                accepted = Some((trial, cand));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((l, p)) => {
                let stalled = l == lambda;
                lambda = l;
                point = p;
                if stalled {
                    break;
                }
            }
            None => break,
        }
    }

    let residual = (&targets - &point.moments).amax();
    if residual.is_nan() || residual > MOMENT_TOLERANCE {
        return Err(Error::InfeasibleConstraints(format!(
            "moment residual {residual:e} after {iterations} Newton iterations"
        )));
    }

    let n = grid.len();
    let values: Vec<f64> = (0..n)
        .map(|i| {
            let e = -(0..m).map(|k| lambda[k] * obs[k][i]).sum::<f64>();
            (e - point.log_z).exp().max(DEFAULT_FLOOR)
        })
        .collect();
    Ok(MaxEntSolution {
        density: DensityField::from_parts(grid.clone(), values, DEFAULT_FLOOR),
        multipliers: lambda.iter().copied().collect(),
        iterations,
        residual,
    })
}
