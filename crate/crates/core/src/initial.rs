//! Initial densities for simulation runs.
//!
//! Every builder ends with a projection onto the active constraint set, so
//! the result is a valid starting point whatever the seed or amplitude.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::density::DensityField;
use crate::dynamics::Constraints;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::integrator::{limit_density, project_onto_constraints};

/// Number of Fourier modes in [`smooth_noise`].
pub const NOISE_MODES: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Uniform,
    /// `1 + amplitude·sin(πr)`.
    PerturbedSine {
        amplitude: f64,
    },
    /// The limit density times `1 + noise·ξ(r)` with seeded smooth `ξ`.
    GibbsPerturbed {
        noise: f64,
    },
    /// Node values read from elsewhere (e.g. a CSV file).
    Values(Vec<f64>),
}

/// Seeded smooth field with `max |ξ| ≤ 1`.
///
/// `ξ` is a fixed function of the normalized coordinate `(r − a)/(b − a)`,
/// so the same seed gives the same profile at every resolution.
pub fn smooth_noise(grid: &Grid, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<(f64, f64)> = (1..=NOISE_MODES)
        .map(|k| {
            let a: f64 = rng.gen_range(-1.0..=1.0);
            let b: f64 = rng.gen_range(-1.0..=1.0);
            (a / k as f64, b / k as f64)
        })
        .collect();
    let bound: f64 = coeffs.iter().map(|(a, b)| a.abs() + b.abs()).sum();
    let (lo, hi) = grid.bounds();
    grid.sample(|r| {
        let x = (r - lo) / (hi - lo);
        coeffs
            .iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let w = (k + 1) as f64 * PI * x;
                a * w.cos() + b * w.sin()
            })
            .sum::<f64>()
            / bound
    })
}

fn check_amplitude(name: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && (0.0..1.0).contains(&value)) {
        return Err(Error::InvalidParams(format!(
            "{name} must lie in [0, 1), got {value}"
        )));
    }
    Ok(())
}

/// Build and project an initial density.
pub fn build_initial(
    grid: &Arc<Grid>,
    spec: &InitialSpec,
    constraints: Constraints<'_>,
    seed: u64,
    floor: f64,
) -> Result<DensityField> {
    let raw = match spec {
        InitialSpec::Uniform => vec![1.0 / grid.measure(); grid.len()],
        InitialSpec::PerturbedSine { amplitude } => {
            check_amplitude("amplitude", *amplitude)?;
            grid.sample(|r| 1.0 + amplitude * (PI * r).sin())
        }
        InitialSpec::GibbsPerturbed { noise } => {
            check_amplitude("noise", *noise)?;
            let base = limit_density(grid, constraints)?;
            let xi = smooth_noise(grid, seed);
            base.values()
                .iter()
                .zip(&xi)
                .map(|(p, x)| p * (1.0 + noise * x))
                .collect()
        }
        InitialSpec::Values(v) => {
            grid.check_len(v)?;
            v.clone()
        }
    };
    project_onto_constraints(grid.clone(), raw, constraints, floor)
}
