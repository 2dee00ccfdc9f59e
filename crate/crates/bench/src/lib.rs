//! Fixtures shared by the criterion benches.

use std::f64::consts::PI;
use std::sync::Arc;

use entropy_flow::{
    build_initial, project_mass, Constraints, DensityField, EnergyDensity, Grid, InitialSpec,
    DEFAULT_FLOOR,
};

pub fn carrier(n: usize) -> Arc<Grid> {
    Arc::new(Grid::uniform(0.0, 2.0, n).expect("valid carrier"))
}

/// Normalized `1 + 0.5 sin(πr)` on `[0, 2]`.
pub fn sine_density(grid: &Arc<Grid>) -> DensityField {
    let raw = grid.sample(|r| 1.0 + 0.5 * (PI * r).sin());
    project_mass(grid.clone(), &raw, DEFAULT_FLOOR).expect("positive profile")
}

/// `h(r) = r` with the target energy 10% below the uniform one.
pub fn linear_energy(grid: &Arc<Grid>) -> EnergyDensity {
    let h = EnergyDensity::from_fn(grid.clone(), |r| r, 0.0).expect("non-constant h");
    h.with_target(0.9 * h.uniform_energy())
        .expect("finite target")
}

/// Perturbed Gibbs density on the energy surface of `h`.
pub fn gibbs_start(grid: &Arc<Grid>, h: &EnergyDensity) -> DensityField {
    build_initial(
        grid,
        &InitialSpec::GibbsPerturbed { noise: 0.5 },
        Constraints::MassEnergy(h),
        0,
        DEFAULT_FLOOR,
    )
    .expect("feasible start")
}
