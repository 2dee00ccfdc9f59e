use std::sync::Arc;

use entropy_flow::dynamics::SgParams;
use entropy_flow::{
    differential_entropy, gibbs_solve, lagrange_multipliers, rhs_mass_energy, run, step,
    uniform_limit, Constraints, EnergyDensity, Grid,
};

fn grid(a: f64, b: f64, n: usize) -> Arc<Grid> {
    Arc::new(Grid::uniform(a, b, n).unwrap())
}

#[test]
fn gibbs_solution_is_an_equilibrium() {
    let g = grid(0.0, 2.0, 400);
    for (hf, e) in [
        (Box::new(|r: f64| r) as Box<dyn Fn(f64) -> f64>, 0.9),
        (Box::new(|r: f64| r), 1.3),
        (Box::new(|r: f64| (r - 0.7).powi(2)), 0.25),
    ] {
        let h = EnergyDensity::from_fn(g.clone(), hf, e).unwrap();
        let sol = gibbs_solve(&h).unwrap();
        for gamma in [0.5, 1.0, 3.0] {
            let u = rhs_mass_energy(&sol.density, &h, gamma).unwrap();
            assert!(u.values().iter().all(|v| v.abs() <= 1e-9));
            let (l1, l2) = lagrange_multipliers(&sol.density, &h, gamma).unwrap();
            let (w1, w2) = sol.multipliers(gamma);
            assert!((l1 - w1).abs() <= 1e-8 && (l2 - w2).abs() <= 1e-8);
        }
        let next = step(
            &sol.density,
            Constraints::MassEnergy(&h),
            &SgParams::default(),
        )
        .unwrap();
        let moved = next
            .values()
            .iter()
            .zip(sol.density.values())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(moved < 1e-12, "{moved}");
    }
}

#[test]
fn uniform_entropy_is_log_measure() {
    for (a, b) in [(0.0, 1.0), (0.0, 2.0), (-3.0, 4.0)] {
        let p = uniform_limit(&grid(a, b, 100));
        assert!((differential_entropy(&p).unwrap() - (b - a).ln()).abs() < 1e-12);
    }
}

#[test]
fn limit_entropy_bounds_the_run() {
    let g = grid(0.0, 1.0, 200);
    let h = EnergyDensity::from_fn(g.clone(), |r| r, 0.4).unwrap();
    let s_star = differential_entropy(&gibbs_solve(&h).unwrap().density).unwrap();
    let p0 = entropy_flow::build_initial(
        &g,
        &entropy_flow::InitialSpec::PerturbedSine { amplitude: 0.3 },
        Constraints::MassEnergy(&h),
        0,
        entropy_flow::DEFAULT_FLOOR,
    )
    .unwrap();
    let t = run(&p0, Constraints::MassEnergy(&h), &SgParams::default()).unwrap();
    assert!(t.converged);
    assert!(t.records.iter().all(|r| r.entropy <= s_star + 1e-12));
    assert!((t.final_record().entropy - s_star).abs() < 1e-9);
}
