//! Invariants of the public operations, checked on random inputs.

use nlfb_core::energy::{interaction, per_sigma};
use nlfb_core::extension::{ExtendedField, CYLINDER_FRACTION};
use nlfb_core::replacement::{
    random_trace_set, solve_replacement, unit_cylinder_grid, ReplacementProblem,
};
use nlfb_core::{
    dirichlet_fractional, Ball, CellGrid, Exterior, ExteriorDatum, NodeField, Params, SetMask,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_mask(grid: &CellGrid, seed: u64, exterior: Exterior) -> SetMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inside = (0..grid.num_cells()).map(|_| rng.gen_bool(0.5)).collect();
    SetMask::new(grid.clone(), inside, exterior).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn perimeter_is_complement_symmetric(seed in any::<u64>(), sigma in 0.1f64..0.9, n in 1usize..=2, half in any::<bool>()) {
        let g = CellGrid::new(n, 2.0, if n == 1 { 16 } else { 4 }).unwrap();
        let ext = if half { Exterior::HalfSpace { axis: 0, offset: 0.0, upper: false } } else { Exterior::Empty };
        let e = random_mask(&g, seed, ext);
        let om = Ball::centered(1.0);
        let a = per_sigma(sigma, &e, &om).unwrap().total();
        let b = per_sigma(sigma, &e.complement(), &om).unwrap().total();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn interaction_is_symmetric(seed in any::<u64>(), sigma in 0.1f64..0.9) {
        let g = CellGrid::new(1, 2.0, 16).unwrap();
        let e = random_mask(&g, seed, Exterior::Empty);
        let c = e.complement();
        prop_assert_eq!(interaction(sigma, &e, &c).unwrap(), interaction(sigma, &c, &e).unwrap());
    }

    #[test]
    fn measure_is_additive(seed in any::<u64>()) {
        let g = CellGrid::new(2, 1.0, 4).unwrap();
        let a = random_mask(&g, seed, Exterior::Empty);
        let b = SetMask::new(g.clone(), a.inside.iter().map(|x| !x).collect(), Exterior::Empty).unwrap();
        prop_assert_eq!(a.measure() + b.measure(), SetMask::full(&g).measure());
    }

    #[test]
    fn dirichlet_energy_ignores_constants(seed in any::<u64>(), s in 0.1f64..0.9, c in -3.0f64..3.0) {
        let p = Params::new(1, s, 0.5).unwrap();
        let g = CellGrid::new(1, 2.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..g.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = NodeField::new(g.clone(), vals, ExteriorDatum::constant(0.2)).unwrap();
        let om = Ball::centered(1.0);
        let (a, _) = dirichlet_fractional(&p, &u, &om).unwrap();
        let (b, _) = dirichlet_fractional(&p, &u.add_constant(c), &om).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn replacement_is_homogeneous_and_ordered(seed in any::<u64>(), s in 0.2f64..0.8, t in 0.1f64..5.0) {
        let p = Params::new(1, s, 0.5).unwrap();
        let grid = unit_cylinder_grid(&p, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = random_trace_set(&grid.base, CYLINDER_FRACTION, 2, &mut rng);
        let amp = rng.gen_range(0.1..2.0);
        let phi = ExtendedField::from_fn(&grid, |x, z| amp * (1.0 + x[0] * z));
        let prob = ReplacementProblem::on_unit_cylinder(phi.clone(), k.clone(), 0.0).unwrap();
        let big = ReplacementProblem::on_unit_cylinder(phi.scale(t), k, 0.0).unwrap();
        let (a, b) = (solve_replacement(&prob).unwrap(), solve_replacement(&big).unwrap());
        prop_assert!((b.energy - t * t * a.energy).abs() <= 1e-9 * b.energy.max(1e-300));
        // a larger constraint set never lowers the energy
        let none = prob.with_k(SetMask::empty(&grid.base)).unwrap();
        prop_assert!(solve_replacement(&none).unwrap().energy <= a.energy + 1e-12);
    }
}

#[test]
fn dirichlet_energy_converges_under_refinement() {
    // a smooth bump of height one and half-width 1/2 at s = 3/4
    let p = Params::new(1, 0.75, 0.5).unwrap();
    let om = Ball::centered(1.0);
    let energy = |m: usize| {
        let g = CellGrid::new(1, 2.0, m).unwrap();
        let u = NodeField::from_fn(&g, ExteriorDatum::zero(), |x| {
            (1.0 - 4.0 * x[0] * x[0]).max(0.0).powi(2)
        });
        dirichlet_fractional(&p, &u, &om).unwrap().0
    };
    let (coarse, fine) = (energy(64), energy(128));
    assert!((coarse - fine).abs() <= 0.02 * fine, "{coarse} vs {fine}");
}
