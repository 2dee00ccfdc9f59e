//! Speed-gradient right-hand sides for the density flow.
//!
//! Two equivalent forms are provided for each constraint set:
//!
//! * the multiplier form `u = −Γ log p + λ₁ h + λ₂` (or `λ` only for the
//!   mass constraint), with the multipliers in closed form;
//! * the operator form `u = −Γ (I − Ψ) log p`, where `Ψ` is the
//!   `L²`-orthogonal projection onto `span{1}` or `span{1, h̃}` and
//!   `h̃ = h − mean(h)`.
//!
//! The operator form is the one the integrator uses.

use std::sync::Arc;

use crate::density::{centered_bilinear_values, same_grid, DensityField, ScalarField};
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Relative threshold on `mes·∫h² − (∫h)²` below which `h` counts as constant.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

/// Upper bound on `dt·Γ` before a stability warning is raised.
pub const STABILITY_CAP: f64 = 0.5;

/// Energy density `h` on a grid together with the conserved total energy `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDensity {
    field: ScalarField,
    target: f64,
    centered: Vec<f64>,
    centered_norm2: f64,
    spread: f64,
}

impl EnergyDensity {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, target_energy: f64) -> Result<Self> {
        if !target_energy.is_finite() {
            return Err(Error::InvalidParams(format!(
                "target energy must be finite, got {target_energy}"
            )));
        }
        let field = ScalarField::new(grid, values)?;
        let grid = field.grid().clone();
        let h = field.values();
        let spread = centered_bilinear_values(&grid, h, h);
        let threshold = degeneracy_threshold(&grid, h);
        if spread.is_nan() || spread <= threshold {
            return Err(Error::DegenerateEnergy {
                value: spread,
                threshold,
            });
        }
        let mean = grid.sum(h) / grid.measure();
        let centered: Vec<f64> = h.iter().map(|v| v - mean).collect();
        let centered_norm2 = grid.dot(&centered, &centered);
        Ok(Self {
            field,
            target: target_energy,
            centered,
            centered_norm2,
            spread,
        })
    }

    pub fn from_fn(grid: Arc<Grid>, h: impl Fn(f64) -> f64, target_energy: f64) -> Result<Self> {
        let values = grid.sample(h);
        Self::new(grid, values, target_energy)
    }

    pub fn with_target(&self, target_energy: f64) -> Result<Self> {
        Self::new(self.grid().clone(), self.values().to_vec(), target_energy)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.field.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn target_energy(&self) -> f64 {
        self.target
    }

    /// `h̃ = h − mean(h)`.
    pub fn centered(&self) -> ScalarField {
        ScalarField::from_parts(self.grid().clone(), self.centered.clone())
    }

    pub(crate) fn centered_values(&self) -> &[f64] {
        &self.centered
    }

    /// `mes·∫h² − (∫h)²`, the denominator of both multipliers.
    pub fn spread(&self) -> f64 {
        self.spread
    }

    pub fn min(&self) -> f64 {
        self.values().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Energy of the uniform density, `∫h / mes`.
    pub fn uniform_energy(&self) -> f64 {
        self.field.mean()
    }

    /// The target must lie strictly inside `(min h, max h)`.
    pub fn check_target(&self) -> Result<()> {
        let (min, max) = (self.min(), self.max());
        if !(self.target > min && self.target < max) {
            return Err(Error::TargetOutOfRange {
                target: self.target,
                min,
                max,
            });
        }
        Ok(())
    }
}

fn degeneracy_threshold(grid: &Grid, h: &[f64]) -> f64 {
    let hmax = h.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    DEGENERACY_THRESHOLD * grid.measure() * grid.measure() * hmax * hmax
}

/// Active constraint set of the flow.
#[derive(Debug, Clone, Copy)]
pub enum Constraints<'a> {
    /// Mass conservation only.
    MassOnly,
    /// Mass and total-energy conservation.
    MassEnergy(&'a EnergyDensity),
}

impl Constraints<'_> {
    pub fn energy(&self) -> Option<&EnergyDensity> {
        match self {
            Constraints::MassOnly => None,
            Constraints::MassEnergy(h) => Some(h),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Constraints::MassOnly => "mass-only",
            Constraints::MassEnergy(_) => "mass-energy",
        }
    }
}

/// Parameters of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SgParams {
    /// Gain `Γ > 0`.
    pub gamma: f64,
    pub dt: f64,
    pub floor: f64,
    pub max_steps: usize,
    /// Run stops once `‖rhs‖_∞` drops below this.
    pub stop_tol: f64,
    /// Keep every `stride`-th state; `None` picks a stride giving at most
    /// [`crate::integrator::MAX_SNAPSHOTS`] snapshots.
    pub stride: Option<usize>,
}

impl Default for SgParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            dt: 0.005,
            floor: crate::density::DEFAULT_FLOOR,
            max_steps: 100_000,
            stop_tol: 1e-8,
            stride: None,
        }
    }
}

impl SgParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParams(what.to_string()));
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad("gamma must be finite and > 0");
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be finite and > 0");
        }
        if !(self.floor.is_finite() && self.floor > 0.0) {
            return bad("floor must be finite and > 0");
        }
        if !(self.stop_tol.is_finite() && self.stop_tol >= 0.0) {
            return bad("stop_tol must be finite and >= 0");
        }
        if self.stride == Some(0) {
            return bad("stride must be >= 1");
        }
        Ok(())
    }

    /// Warning text when `dt·Γ` exceeds [`STABILITY_CAP`].
    pub fn stability_warning(&self) -> Option<String> {
        let product = self.dt * self.gamma;
        (product > STABILITY_CAP).then(|| {
            format!("dt*gamma = {product} exceeds the stability cap {STABILITY_CAP}; explicit stepping may blow up")
        })
    }
}

/// The projection `Ψ` onto `span{1}` or `span{1, h̃}`.
#[derive(Debug, Clone)]
pub struct Psi {
    grid: Arc<Grid>,
    energy: Option<(Vec<f64>, f64)>,
}

impl Psi {
    pub fn new(grid: Arc<Grid>, constraints: Constraints<'_>) -> Result<Self> {
        let energy = match constraints {
            Constraints::MassOnly => None,
            Constraints::MassEnergy(h) => {
                if !same_grid(&grid, h.grid()) {
                    return Err(Error::GridMismatch);
                }
                Some((h.centered_values().to_vec(), h.centered_norm2))
            }
        };
        Ok(Self { grid, energy })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        if !same_grid(&self.grid, f.grid()) {
            return Err(Error::GridMismatch);
        }
        let mut out = vec![0.0; f.values().len()];
        self.apply_into(f.values(), &mut out);
        Ok(ScalarField::from_parts(self.grid.clone(), out))
    }

    pub(crate) fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        let mean = self.grid.sum(f) / self.grid.measure();
        match &self.energy {
            None => out.iter_mut().for_each(|o| *o = mean),
            Some((ht, norm2)) => {
                let coef = self.grid.dot(ht, f) / norm2;
                for (o, h) in out.iter_mut().zip(ht) {
                    *o = mean + coef * h;
                }
            }
        }
    }

    /// `−Γ(I − Ψ) log p` on raw node values. Fails with the offending index
    /// if some value is not strictly positive and finite.
    pub(crate) fn flow_into(
        &self,
        values: &[f64],
        gamma: f64,
        log_buf: &mut [f64],
        out: &mut [f64],
    ) -> std::result::Result<(), usize> {
        for (i, (l, &p)) in log_buf.iter_mut().zip(values).enumerate() {
            if !(p > 0.0 && p.is_finite()) {
                return Err(i);
            }
            *l = p.ln();
        }
        self.apply_into(log_buf, out);
        for (o, l) in out.iter_mut().zip(log_buf.iter()) {
            *o = -gamma * (l - *o);
        }
        Ok(())
    }

    /// Operator-form flow field at `p`.
    pub fn flow(&self, p: &DensityField, gamma: f64) -> Result<ScalarField> {
        if !same_grid(&self.grid, p.grid()) {
            return Err(Error::GridMismatch);
        }
        let n = p.values().len();
        let mut log_buf = vec![0.0; n];
        let mut out = vec![0.0; n];
        self.flow_into(p.values(), gamma, &mut log_buf, &mut out)
            .map_err(|index| Error::NonpositiveDensity {
                index,
                value: p.values()[index],
            })?;
        Ok(ScalarField::from_parts(self.grid.clone(), out))
    }
}

/// `Ψ f` for the given constraint set.
pub fn apply_psi(f: &ScalarField, constraints: Constraints<'_>) -> Result<ScalarField> {
    Psi::new(f.grid().clone(), constraints)?.apply(f)
}

/// Operator-form right-hand side `−Γ(I − Ψ) log p`.
pub fn flow(p: &DensityField, constraints: Constraints<'_>, gamma: f64) -> Result<ScalarField> {
    Psi::new(p.grid().clone(), constraints)?.flow(p, gamma)
}

/// Mass-only law `ṗ = −Γ(log p − ∫log p / mes)`.
pub fn rhs_mass_only(p: &DensityField, gamma: f64) -> ScalarField {
    let grid = p.grid();
    let log_p = p.log_values();
    let mean = grid.sum(&log_p) / grid.measure();
    let values = log_p.iter().map(|l| -gamma * (l - mean)).collect();
    ScalarField::from_parts(grid.clone(), values)
}

/// Closed-form multipliers `(λ₁, λ₂)` of the two-constraint law.
pub fn lagrange_multipliers(p: &DensityField, h: &EnergyDensity, gamma: f64) -> Result<(f64, f64)> {
    if !same_grid(p.grid(), h.grid()) {
        return Err(Error::GridMismatch);
    }
    let grid = p.grid();
    let log_p = p.log_values();
    let hv = h.values();
    let m = grid.measure();
    let int_log = grid.sum(&log_p);
    let int_h = grid.sum(hv);
    let int_h2 = grid.dot(hv, hv);
    let int_log_h = grid.dot(&log_p, hv);
    let denom = m * int_h2 - int_h * int_h;
    let threshold = degeneracy_threshold(grid, hv);
    if denom.is_nan() || denom <= threshold {
        return Err(Error::DegenerateEnergy {
            value: denom,
            threshold,
        });
    }
    let lambda1 = gamma * (m * int_log_h - int_log * int_h) / denom;
    let lambda2 = gamma * (int_log * int_h2 - int_h * int_log_h) / denom;
    Ok((lambda1, lambda2))
}

/// Two-constraint law in multiplier form, `ṗ = −Γ log p + λ₁h + λ₂`.
pub fn rhs_mass_energy(p: &DensityField, h: &EnergyDensity, gamma: f64) -> Result<ScalarField> {
    let (l1, l2) = lagrange_multipliers(p, h, gamma)?;
    let values = p
        .values()
        .iter()
        .zip(h.values())
        .map(|(pv, hv)| -gamma * pv.ln() + l1 * hv + l2)
        .collect();
    Ok(ScalarField::from_parts(p.grid().clone(), values))
}

/// Entropy production `Ṡ = −∫ u log p` along a tangent field `u`.
pub fn entropy_production(p: &DensityField, u: &ScalarField) -> Result<f64> {
    if !same_grid(p.grid(), u.grid()) {
        return Err(Error::GridMismatch);
    }
    Ok(-p.grid().dot(u.values(), &p.log_values()))
}
