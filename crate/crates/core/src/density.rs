//! Density and scalar fields on a grid, and the functionals built on them:
//! differential entropy, the quadrature scalar product, and the centered
//! bilinear form `⟨f, g⟩ = mes·∫fg − ∫f·∫g`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Default lower bound on admissible density values.
pub const DEFAULT_FLOOR: f64 = 1e-12;

/// Mass error below which [`project_mass`] leaves an already-floored
/// field untouched.
const IDEMPOTENCE_SLACK: f64 = 1e-14;

/// Mass tolerance accepted by [`DensityField::new`].
pub const MASS_TOLERANCE: f64 = 1e-10;

pub(crate) fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Real-valued field on a grid (no sign constraint).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        grid.check_len(&values)?;
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.sample(f);
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![c; n])
    }

    pub(crate) fn from_parts(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn integral(&self) -> f64 {
        self.grid.sum(&self.values)
    }

    /// Quadrature L2 norm.
    pub fn norm(&self) -> f64 {
        self.grid.dot(&self.values, &self.values).sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.integral() / self.grid.measure()
    }

    /// The field minus its mean, so that it integrates to zero.
    pub fn centered(&self) -> ScalarField {
        let m = self.mean();
        Self::from_parts(
            self.grid.clone(),
            self.values.iter().map(|v| v - m).collect(),
        )
    }

    pub fn scaled(&self, alpha: f64) -> ScalarField {
        Self::from_parts(
            self.grid.clone(),
            self.values.iter().map(|v| alpha * v).collect(),
        )
    }
}

/// Probability density on a grid: values at least `floor`, unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    floor: f64,
}

impl DensityField {
    /// Validate an already-normalized density.
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, floor: f64) -> Result<Self> {
        check_floor(floor)?;
        grid.check_len(&values)?;
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || value < floor || value <= 0.0 {
                return Err(Error::NonpositiveDensity { index, value });
            }
        }
        let mass = grid.sum(&values);
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::ConstraintViolation(format!(
                "mass {mass} differs from 1 by more than {MASS_TOLERANCE:e}"
            )));
        }
        Ok(Self {
            grid,
            values,
            floor,
        })
    }

    pub(crate) fn from_parts(grid: Arc<Grid>, values: Vec<f64>, floor: f64) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self {
            grid,
            values,
            floor,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn mass(&self) -> f64 {
        self.grid.sum(&self.values)
    }

    /// `∫ p h dr` for a node-valued `h`.
    pub fn expectation(&self, h: &[f64]) -> Result<f64> {
        self.grid.inner(&self.values, h)
    }

    /// `log p` as a scalar field.
    pub fn log_field(&self) -> ScalarField {
        ScalarField::from_parts(self.grid.clone(), self.log_values())
    }

    pub(crate) fn log_values(&self) -> Vec<f64> {
        self.values.iter().map(|p| p.ln()).collect()
    }

    pub fn as_scalar(&self) -> ScalarField {
        ScalarField::from_parts(self.grid.clone(), self.values.clone())
    }

    pub fn entropy(&self) -> Result<f64> {
        differential_entropy(self)
    }
}

fn check_floor(floor: f64) -> Result<()> {
    if !(floor.is_finite() && floor > 0.0) {
        return Err(Error::InvalidParams(format!(
            "floor must be finite and > 0, got {floor}"
        )));
    }
    Ok(())
}

/// `−Σ w_i p_i log p_i` for raw node values; errors on any nonpositive entry.
pub fn entropy_of_values(grid: &Grid, values: &[f64]) -> Result<f64> {
    grid.check_len(values)?;
    let mut acc = 0.0;
    for (index, (&w, &p)) in grid.weights().iter().zip(values).enumerate() {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::NonpositiveDensity { index, value: p });
        }
        acc -= w * p * p.ln();
    }
    Ok(acc)
}

/// Differential entropy in nats.
pub fn differential_entropy(p: &DensityField) -> Result<f64> {
    entropy_of_values(&p.grid, &p.values)
}

/// `∫ f g dr`.
pub fn scalar_product(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    if !same_grid(&f.grid, &g.grid) {
        return Err(Error::GridMismatch);
    }
    Ok(f.grid.dot(&f.values, &g.values))
}

/// `mes·∫fg − ∫f·∫g`; positive semidefinite, zero exactly on constants.
pub fn centered_bilinear(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    if !same_grid(&f.grid, &g.grid) {
        return Err(Error::GridMismatch);
    }
    Ok(centered_bilinear_values(&f.grid, &f.values, &g.values))
}

pub(crate) fn centered_bilinear_values(grid: &Grid, f: &[f64], g: &[f64]) -> f64 {
    grid.measure() * grid.dot(f, g) - grid.sum(f) * grid.sum(g)
}

/// Clip values below `floor` up to `floor`, then rescale to unit mass.
pub fn project_mass(grid: Arc<Grid>, raw: &[f64], floor: f64) -> Result<DensityField> {
    check_floor(floor)?;
    grid.check_len(raw)?;
    if let Some((index, &value)) = raw.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, value });
    }
    if !raw.iter().any(|&v| v > floor) {
        return Err(Error::AllBelowFloor { floor });
    }
    let mut values: Vec<f64> = raw.iter().map(|&v| v.max(floor)).collect();
    let mass = grid.sum(&values);
    if (mass - 1.0).abs() <= IDEMPOTENCE_SLACK {
        return Ok(DensityField::from_parts(grid, values, floor));
    }
    if floor * grid.measure() >= 1.0 {
        return Err(Error::InvalidParams(format!(
            "floor {floor} times measure {} leaves no room for unit mass",
            grid.measure()
        )));
    }
    // Rescale; entries the rescale would push under the floor are pinned
    // there and the remaining mass is redistributed over the others.
    let mut pinned = vec![false; values.len()];
    let mut scale = 1.0 / mass;
    loop {
        let mut newly = false;
        for (v, pin) in values.iter().zip(pinned.iter_mut()) {
            if !*pin && *v * scale < floor {
                *pin = true;
                newly = true;
            }
        }
        let (mut pinned_mass, mut free_mass) = (0.0, 0.0);
        for ((w, v), pin) in grid.weights().iter().zip(&values).zip(&pinned) {
            if *pin {
                pinned_mass += w * floor;
            } else {
                free_mass += w * v;
            }
        }
        if !newly {
            for (v, pin) in values.iter_mut().zip(&pinned) {
                *v = if *pin { floor } else { *v * scale };
            }
            break;
        }
        scale = (1.0 - pinned_mass) / free_mass;
    }
    Ok(DensityField::from_parts(grid, values, floor))
}
