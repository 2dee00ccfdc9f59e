//! Speed-gradient entropy dynamics of probability densities on a compact
//! interval.
//!
//! A density `p(t, r)` evolves by `ṗ = −Γ(I − Ψ) log p`, where `Ψ` projects
//! onto the directions fixed by the conserved quantities (mass, and
//! optionally total energy `∫ p h = E`). The flow increases differential
//! entropy monotonically and converges to the maximum-entropy density for
//! the active constraints: the uniform density, or the Gibbs density
//! `C e^{−μh}`.
//!
//! Modules:
//! * [`grid`]: midpoint quadrature on `[a, b]`;
//! * [`density`]: density/scalar fields, entropy, and the bilinear forms;
//! * [`dynamics`]: right-hand sides and the projection `Ψ`;
//! * [`integrator`]: RK4 stepping with constraint re-projection;
//! * [`maxent`]: stationary MaxEnt solutions used as independent limits;
//! * [`diagnostics`]: Lyapunov and convergence diagnostics per step;
//! * [`initial`], [`io`]: initial-density builders and CSV/JSON exchange;
//! * [`verify`]: the end-to-end verification suite.

pub mod density;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod initial;
pub mod integrator;
pub mod io;
pub mod maxent;
pub mod verify;

pub use density::{
    centered_bilinear, differential_entropy, project_mass, scalar_product, DensityField,
    ScalarField, DEFAULT_FLOOR,
};
pub use diagnostics::{
    alignment_angle, gh_moment, lyapunov_value, vdot_mass_energy, vdot_mass_only, TrajectoryRecord,
};
pub use dynamics::{
    apply_psi, flow, lagrange_multipliers, rhs_mass_energy, rhs_mass_only, Constraints,
    EnergyDensity, Psi, SgParams,
};
pub use error::{Error, Result};
pub use grid::Grid;
pub use initial::{build_initial, InitialSpec};
pub use integrator::{run, step, Trajectory};
pub use maxent::{gibbs_solve, jaynes_maxent, uniform_limit, GibbsSolution, MomentConstraint};
pub use verify::{run_all, CriterionResult, SuiteConfig};
