//! Quantities tracked along a trajectory: the Lyapunov function
//! `V = S_max − S`, its analytic time derivative, the angle between
//! `log p` and a reference direction, and the moment `∫p|log p|^k`.

use serde::{Deserialize, Serialize};

use crate::density::{
    centered_bilinear_values, differential_entropy, same_grid, DensityField, ScalarField,
};
use crate::dynamics::EnergyDensity;
use crate::error::{Error, Result};

/// Default exponent for [`gh_moment`].
pub const DEFAULT_GH_EXPONENT: f64 = 2.0;

/// CSV column order of [`TrajectoryRecord`].
pub const RECORD_COLUMNS: [&str; 11] = [
    "t",
    "S",
    "V",
    "vdot_analytic",
    "vdot_numeric",
    "mass_residual",
    "energy_residual",
    "dist_l2",
    "dist_linf",
    "angle",
    "gh_k2",
];

/// Per-step diagnostics. `energy_residual` is NaN for mass-only runs and
/// `vdot_numeric` is NaN until [`fill_numeric_vdot`] has run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub entropy: f64,
    pub lyapunov: f64,
    pub vdot_analytic: f64,
    pub vdot_numeric: f64,
    pub mass_residual: f64,
    pub energy_residual: f64,
    pub dist_l2: f64,
    pub dist_linf: f64,
    pub angle: f64,
    pub gh_moment_k2: f64,
}

impl TrajectoryRecord {
    pub fn as_row(&self) -> [f64; 11] {
        [
            self.t,
            self.entropy,
            self.lyapunov,
            self.vdot_analytic,
            self.vdot_numeric,
            self.mass_residual,
            self.energy_residual,
            self.dist_l2,
            self.dist_linf,
            self.angle,
            self.gh_moment_k2,
        ]
    }
}

/// `V(p) = S_max − S(p)`.
pub fn lyapunov_value(p: &DensityField, s_max: f64) -> Result<f64> {
    Ok(s_max - differential_entropy(p)?)
}

/// `V̇ = −(Γ/mes)·⟨log p, log p⟩` under the mass-only flow.
pub fn vdot_mass_only(p: &DensityField, gamma: f64) -> f64 {
    let grid = p.grid();
    let l = p.log_values();
    -(gamma / grid.measure()) * centered_bilinear_values(grid, &l, &l)
}

/// `V̇ = (Γ/mes)·[−⟨ℓ,ℓ⟩ + ⟨ℓ,h⟩²/⟨h,h⟩]`, `ℓ = log p`, under the
/// two-constraint flow.
pub fn vdot_mass_energy(p: &DensityField, h: &EnergyDensity, gamma: f64) -> Result<f64> {
    if !same_grid(p.grid(), h.grid()) {
        return Err(Error::GridMismatch);
    }
    let grid = p.grid();
    let l = p.log_values();
    let hv = h.values();
    let bll = centered_bilinear_values(grid, &l, &l);
    let blh = centered_bilinear_values(grid, &l, hv);
    let bhh = h.spread();
    // Cauchy–Bunyakovsky makes the bracket ≤ 0; clamp the roundoff excess
    Ok((gamma / grid.measure()) * (-bll + blh * blh / bhh).min(0.0))
}

/// Angle in `[0, π]` between `log p` and `reference` in the quadrature
/// inner product.
pub fn alignment_angle(p: &DensityField, reference: &ScalarField) -> Result<f64> {
    if !same_grid(p.grid(), reference.grid()) {
        return Err(Error::GridMismatch);
    }
    let grid = p.grid();
    let l = p.log_values();
    angle_between(grid, &l, reference.values())
}

pub(crate) fn angle_between(grid: &crate::grid::Grid, a: &[f64], b: &[f64]) -> Result<f64> {
    let na = grid.dot(a, a).sqrt();
    let nb = grid.dot(b, b).sqrt();
    if na < 1e-14 || nb < 1e-14 {
        return Err(Error::ZeroField);
    }
    let cos = (grid.dot(a, b) / (na * nb)).clamp(-1.0, 1.0);
    Ok(cos.acos())
}

/// `∫ p |log p|^k`, `k > 1`.
pub fn gh_moment(p: &DensityField, k: f64) -> Result<f64> {
    if !(k > 1.0 && k.is_finite()) {
        return Err(Error::InvalidExponent(k));
    }
    let grid = p.grid();
    Ok(grid
        .weights()
        .iter()
        .zip(p.values())
        .map(|(w, &v)| w * v * v.ln().abs().powf(k))
        .sum())
}

/// `(√∫(p − q)², max|p − q|)`.
pub fn distances(p: &[f64], q: &[f64], weights: &[f64]) -> (f64, f64) {
    let mut l2 = 0.0;
    let mut linf = 0.0_f64;
    for ((a, b), w) in p.iter().zip(q).zip(weights) {
        let d = a - b;
        l2 += w * d * d;
        linf = linf.max(d.abs());
    }
    (l2.sqrt(), linf)
}

/// Fill `vdot_numeric` by finite differences of `V` over the record times:
/// central in the interior, one-sided at the ends.
pub fn fill_numeric_vdot(records: &mut [TrajectoryRecord]) {
    let n = records.len();
    if n < 2 {
        if let Some(r) = records.first_mut() {
            r.vdot_numeric = f64::NAN;
        }
        return;
    }
    for i in 0..n {
        let (lo, hi) = match i {
            0 => (0, 1),
            _ if i == n - 1 => (n - 2, n - 1),
            _ => (i - 1, i + 1),
        };
        let dv = records[hi].lyapunov - records[lo].lyapunov;
        let dt = records[hi].t - records[lo].t;
        records[i].vdot_numeric = dv / dt;
    }
}

/// Whether an analytic/numeric pair agrees within `max(1e-6, 1e-3·|analytic|)`.
pub fn vdot_agrees(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= f64::max(1e-6, 1e-3 * analytic.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{project_mass, DEFAULT_FLOOR};
    use crate::dynamics::{flow, rhs_mass_only, Constraints};
    use crate::grid::Grid;
    use crate::maxent::{gibbs_solve, uniform_limit};
    use std::f64::consts::{FRAC_PI_2, PI};
    use std::sync::Arc;

    fn grid(a: f64, b: f64, n: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform(a, b, n).unwrap())
    }

    fn density(g: &Arc<Grid>, f: impl Fn(f64) -> f64) -> DensityField {
        project_mass(g.clone(), &g.sample(f), DEFAULT_FLOOR).unwrap()
    }

    #[test]
    fn lyapunov_values() {
        let g = grid(0.0, 2.0, 400);
        let star = uniform_limit(&g);
        let s_max = 2f64.ln();
        assert!(lyapunov_value(&star, s_max).unwrap().abs() < 1e-14);

        // S = −∫ p log p for p = (1 + 0.4 sin πr)/2, by an independent
        // composite Simpson rule on a much finer mesh
        let f = |r: f64| 0.5 * (1.0 + 0.4 * (PI * r).sin());
        let m = 200_000;
        let h = 2.0 / m as f64;
        let mut acc = 0.0;
        for i in 0..=m {
            let r = i as f64 * h;
            let c = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += c * f(r) * f(r).ln();
        }
        let s_oracle = -acc * h / 3.0;

        let p = density(&g, f);
        let v = lyapunov_value(&p, s_max).unwrap();
        assert!(v > 0.0);
        assert!((v - (s_max - s_oracle)).abs() < 1e-6);
    }

    #[test]
    fn vdot_mass_only_signs_and_flow_identity() {
        let g = grid(0.0, 2.0, 128);
        assert!(vdot_mass_only(&uniform_limit(&g), 1.0).abs() < 1e-14);
        let p = density(&g, |r| 1.0 + 0.5 * (2.0 * r).cos());
        let v = vdot_mass_only(&p, 1.4);
        assert!(v < 0.0);
        // V̇ = ∫ u log p along the flow
        let u = rhs_mass_only(&p, 1.4);
        let direct = g.inner(u.values(), &p.log_values()).unwrap();
        assert!((v - direct).abs() < 1e-10);
    }

    #[test]
    fn vdot_mass_energy_signs() {
        let g = grid(0.0, 2.0, 128);
        let h = EnergyDensity::from_fn(g.clone(), |r| r, 0.9).unwrap();
        let star = gibbs_solve(&h).unwrap().density;
        assert!(vdot_mass_energy(&star, &h, 1.0).unwrap().abs() < 1e-12);
        let v = vdot_mass_energy(&uniform_limit(&g), &h, 1.0).unwrap();
        assert!(v <= 0.0);
        let p = density(&g, |r| 1.0 + 0.3 * (3.0 * r).sin());
        let v = vdot_mass_energy(&p, &h, 2.0).unwrap();
        assert!(v < 0.0);
        let u = flow(&p, Constraints::MassEnergy(&h), 2.0).unwrap();
        let direct = g.inner(u.values(), &p.log_values()).unwrap();
        assert!((v - direct).abs() < 1e-10);
    }

    #[test]
    fn uniform_density_is_not_gibbs_for_shifted_energy() {
        // uniform has log p ∈ span{1, h} so V̇ = 0 even though E differs:
        // the flow cannot leave the energy surface it starts on
        let g = grid(0.0, 2.0, 64);
        let h = EnergyDensity::from_fn(g.clone(), |r| r, 0.9).unwrap();
        assert!(vdot_mass_energy(&uniform_limit(&g), &h, 1.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn angles() {
        let g = grid(0.0, 1.0, 50);
        let one = ScalarField::constant(g.clone(), 1.0).unwrap();
        // carrier of measure < 1 makes log p a positive constant
        let gs = grid(0.0, 0.5, 50);
        let p = uniform_limit(&gs);
        let one_s = ScalarField::constant(gs.clone(), 1.0).unwrap();
        assert!(alignment_angle(&p, &one_s).unwrap().abs() < 1e-7);

        // log p = h̃ (zero-mean) is orthogonal to constants
        let raw = g.sample(|r| (r - 0.5).exp());
        let z = g.integrate(&raw).unwrap();
        assert!((z - 1.0).abs() < 0.05);
        let ht: Vec<f64> = g.nodes().iter().map(|r| r - 0.5).collect();
        let p = DensityField::from_parts(g.clone(), raw, DEFAULT_FLOOR);
        let a = angle_between(&g, &p.log_values(), one.values()).unwrap();
        assert!((a - FRAC_PI_2).abs() < 1e-12);
        let a = angle_between(&g, &ht, one.values()).unwrap();
        assert!((a - FRAC_PI_2).abs() < 1e-12);

        // scale invariance
        let p = density(&g, |r| 1.0 + r);
        let a1 =
            alignment_angle(&p, &ScalarField::from_fn(g.clone(), |r| r + 2.0).unwrap()).unwrap();
        let a2 = alignment_angle(
            &p,
            &ScalarField::from_fn(g.clone(), |r| 7.5 * (r + 2.0)).unwrap(),
        )
        .unwrap();
        assert!((a1 - a2).abs() < 1e-12);

        // measure-one uniform: log p ≡ 0
        assert_eq!(
            alignment_angle(&uniform_limit(&g), &one),
            Err(Error::ZeroField)
        );
    }

    #[test]
    fn gh_moments() {
        let g = grid(0.0, 1.0, 20);
        assert_eq!(gh_moment(&uniform_limit(&g), 2.0).unwrap(), 0.0);
        let g = grid(0.0, 2.0, 20);
        let v = gh_moment(&uniform_limit(&g), 2.0).unwrap();
        assert!((v - 2f64.ln().powi(2)).abs() < 1e-14);
        assert!((v - 0.4805).abs() < 1e-4);
        assert_eq!(
            gh_moment(&uniform_limit(&g), 1.0),
            Err(Error::InvalidExponent(1.0))
        );
    }

    #[test]
    fn numeric_vdot_on_quadratic() {
        // V(t) = t² ⇒ central difference is exact
        let mut recs: Vec<TrajectoryRecord> = (0..5)
            .map(|i| {
                let t = i as f64 * 0.1;
                TrajectoryRecord {
                    t,
                    entropy: 0.0,
                    lyapunov: t * t,
                    vdot_analytic: 2.0 * t,
                    vdot_numeric: f64::NAN,
                    mass_residual: 0.0,
                    energy_residual: f64::NAN,
                    dist_l2: 0.0,
                    dist_linf: 0.0,
                    angle: 0.0,
                    gh_moment_k2: 0.0,
                }
            })
            .collect();
        fill_numeric_vdot(&mut recs);
        for r in &recs[1..4] {
            assert!((r.vdot_numeric - r.vdot_analytic).abs() < 1e-12);
        }
        assert!((recs[0].vdot_numeric - 0.1).abs() < 1e-12);
    }

    #[test]
    fn agreement_tolerance() {
        assert!(vdot_agrees(-1.0, -1.0009));
        assert!(!vdot_agrees(-1.0, -1.002));
        assert!(vdot_agrees(-1e-8, 5e-7));
        assert!(!vdot_agrees(-1e-8, 2e-6));
    }
}
