use super::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid(n: usize, s: f64, m: usize) -> HalfCylinderGrid {
    let p = Params::new(n, s, 0.5).unwrap();
    unit_cylinder_grid(&p, m).unwrap()
}

fn random_phi<R: Rng>(g: &HalfCylinderGrid, rng: &mut R) -> ExtendedField {
    let (a, b, c) = (
        rng.gen_range(0.2..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(0.5..3.0),
    );
    ExtendedField::from_fn(g, move |x, z| {
        a + 0.3 * (1.0 + (c * x[0] + b).sin()) * (1.0 + z) + 0.2 * x[1] * x[1]
    })
}

fn random_problem<R: Rng>(g: &HalfCylinderGrid, gamma: f64, rng: &mut R) -> ReplacementProblem {
    let k = random_trace_set(&g.base, CYLINDER_FRACTION, 2, rng);
    ReplacementProblem::on_unit_cylinder(random_phi(g, rng), k, gamma).unwrap()
}

#[test]
fn minimizer_is_orthogonal_to_admissible_variations() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for &(n, s, m) in &[(1, 0.3, 32), (1, 0.7, 32), (2, 0.5, 8)] {
        let g = grid(n, s, m);
        for _ in 0..3 {
            let p = random_problem(&g, rng.gen_range(0.0..0.5), &mut rng);
            let sol = solve_replacement(&p).unwrap();
            let o = orthogonality_residual(&sol.field, &p, 10, &mut rng);
            assert!(o.residual <= 1e-8 && o.pythagoras <= 1e-8, "{o:?}");
            assert!(harmonicity_residual(&sol.field, &p) <= 1e-8);
        }
    }
}

#[test]
fn perturbation_shows_up_in_the_divergence() {
    let g = grid(1, 0.4, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = random_problem(&g, 0.0, &mut rng);
    let mut sol = solve_replacement(&p).unwrap().field;
    let free = p.free();
    let i = (0..free.len()).filter(|&i| free[i]).nth(40).unwrap();
    let before = nodal_divergence(&sol, &p)[i];
    sol.values[i] += 1.0;
    let after = nodal_divergence(&sol, &p)[i];
    assert!((after - before - p.form().diagonal(i)).abs() <= 1e-10 * p.form().diagonal(i));
    assert!(harmonicity_residual(&sol, &p) > 0.99);
}

#[test]
fn maximum_principles() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for &(n, m) in &[(1, 32), (2, 8)] {
        let g = grid(n, 0.45, m);
        for _ in 0..4 {
            let gamma = rng.gen_range(0.0..2.0);
            let p = random_problem(&g, gamma, &mut rng);
            let sol = solve_replacement(&p).unwrap();
            let (lo, hi) = check_bounds(&sol.field, &p).unwrap();
            assert!(lo >= -1e-9 && hi <= p.boundary_sup().max(gamma) + 1e-9);
        }
    }
    let g = grid(1, 0.45, 16);
    let p = random_problem(&g, 0.0, &mut rng);
    let mut bad = p.phi.clone();
    let inner = (0..bad.values.len()).find(|&i| p.free()[i]).unwrap();
    bad.values[inner] = -1.0;
    assert_eq!(
        check_bounds(&bad, &p).unwrap_err().kind(),
        "maximum-principle-violated"
    );
}

#[test]
fn zero_constraint_gives_a_subharmonic_minimizer() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for &(n, m) in &[(1, 32), (2, 8)] {
        let g = grid(n, 0.6, m);
        for _ in 0..3 {
            let p = random_problem(&g, 0.0, &mut rng);
            let sol = solve_replacement(&p).unwrap();
            assert!(subharmonicity_check(&sol.field, &p, 20, &mut rng) <= 1e-8);
        }
    }
}

#[test]
fn enlarging_the_constraint_set_costs_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = grid(1, 0.35, 32);
    for _ in 0..6 {
        let p = random_problem(&g, 0.0, &mut rng);
        let extra = random_trace_set(&g.base, CYLINDER_FRACTION, 1, &mut rng);
        let a = minus(&extra, &p.k_mask);
        assert!(energy_increment(&p, &a).unwrap() >= -1e-9);
    }
    let p = random_problem(&g, 0.0, &mut rng);
    if p.k_mask.count() > 0 {
        assert_eq!(
            energy_increment(&p, &p.k_mask).unwrap_err().kind(),
            "sets-not-disjoint"
        );
    }
}

#[test]
fn increments_are_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for &(n, m) in &[(1, 32), (2, 8)] {
        let g = grid(n, 0.5, m);
        let trials = if n == 1 { 6 } else { 2 };
        for _ in 0..trials {
            let phi2 = random_phi(&g, &mut rng);
            let t = rng.gen_range(0.2..1.0);
            let phi1 = phi2.scale(t);
            let k2 = random_trace_set(&g.base, CYLINDER_FRACTION, 1, &mut rng);
            let k1 = union(
                &k2,
                &random_trace_set(&g.base, CYLINDER_FRACTION, 1, &mut rng),
            );
            let a1 = random_trace_set(&g.base, CYLINDER_FRACTION, 1, &mut rng);
            let a2 = union(
                &a1,
                &random_trace_set(&g.base, CYLINDER_FRACTION, 1, &mut rng),
            );
            let p1 = ReplacementProblem::on_unit_cylinder(phi1, k1, 0.0).unwrap();
            let p2 = ReplacementProblem::on_unit_cylinder(phi2, k2, 0.0).unwrap();
            let mono = monotonicity_check(&p1, &p2, &a1, &a2).unwrap();
            assert!(mono.defect >= -1e-9, "{mono:?}");
        }
    }
}

#[test]
fn monotonicity_hypotheses_are_checked() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = grid(1, 0.5, 16);
    let phi = random_phi(&g, &mut rng);
    let k = random_trace_set(&g.base, CYLINDER_FRACTION, 1, &mut rng);
    let empty = SetMask::empty(&g.base);
    let p_big = ReplacementProblem::on_unit_cylinder(phi.scale(2.0), k.clone(), 0.0).unwrap();
    let p_small = ReplacementProblem::on_unit_cylinder(phi.clone(), k, 0.0).unwrap();
    let err = monotonicity_check(&p_big, &p_small, &empty, &empty).unwrap_err();
    assert_eq!(err.kind(), "monotonicity-preconditions");
    let p_gamma = ReplacementProblem::on_unit_cylinder(phi, empty.clone(), 0.5).unwrap();
    let err = monotonicity_check(&p_gamma, &p_gamma, &empty, &empty).unwrap_err();
    assert_eq!(err.kind(), "monotonicity-preconditions");
}

#[test]
fn radial_increments() {
    let g = grid(1, 0.5, 32);
    let inc = radial_increment(&g, 0.5, 0.25, 1.0).unwrap();
    assert!(inc.increment > 0.0 && inc.measure > 0.0);
    assert!(inc.ratio() > 0.0);
    // the energy is quadratic in the datum
    let inc2 = radial_increment(&g, 0.5, 0.25, 2.0).unwrap();
    assert!((inc2.increment - 4.0 * inc.increment).abs() <= 1e-9 * inc2.increment);
    for (rho, r, c) in [
        (0.8, 0.2, 1.0),
        (0.2, 0.1, 1.0),
        (0.5, 0.6, 1.0),
        (0.5, 0.5, 1.0),
        (0.5, 0.0, 1.0),
        (0.5, 0.2, -1.0),
    ] {
        assert_eq!(
            radial_increment(&g, rho, r, c).unwrap_err().kind(),
            "radial-range"
        );
    }
}

#[test]
fn relaxed_constraint_gives_the_same_minimizer() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = grid(1, 0.4, 16);
    for _ in 0..3 {
        let p = random_problem(&g, 0.0, &mut rng);
        let eq = solve_replacement(&p).unwrap();
        let relaxed = solve_relaxed(&p, 1.8, 1e-13, 200_000).unwrap();
        assert!((relaxed.energy - eq.energy).abs() <= 1e-7 * eq.energy.max(1.0));
        let worst = eq
            .field
            .values
            .iter()
            .zip(&relaxed.field.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
    }
}

#[test]
fn minimizer_does_not_depend_on_the_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = grid(2, 0.3, 8);
    let p = random_problem(&g, 0.3, &mut rng);
    let a: Vec<f64> = (0..g.num_nodes())
        .map(|_| rng.gen_range(-5.0..5.0))
        .collect();
    let b: Vec<f64> = (0..g.num_nodes())
        .map(|_| rng.gen_range(-5.0..5.0))
        .collect();
    let (sa, sb) = (solve_from(&p, &a).unwrap(), solve_from(&p, &b).unwrap());
    let scale = sa.field.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (x, y) in sa.field.values.iter().zip(&sb.field.values) {
        assert!((x - y).abs() <= 1e-9 * scale);
    }
}

#[test]
fn minimizer_scales_with_the_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let g = grid(1, 0.55, 32);
    let p = random_problem(&g, 0.4, &mut rng);
    let t = 3.7;
    let q = ReplacementProblem::on_unit_cylinder(p.phi.scale(t), p.k_mask.clone(), t * p.gamma)
        .unwrap();
    let (sp, sq) = (
        solve_replacement(&p).unwrap(),
        solve_replacement(&q).unwrap(),
    );
    let scale = sq.field.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (x, y) in sp.field.values.iter().zip(&sq.field.values) {
        assert!((t * x - y).abs() <= 1e-10 * scale);
    }
    assert!((sq.energy - t * t * sp.energy).abs() <= 1e-9 * sq.energy);
}

#[test]
fn constraint_set_must_lie_in_the_cylinder() {
    let g = grid(1, 0.5, 16);
    let phi = ExtendedField::constant(&g, 1.0);
    let near_edge = SetMask::from_fn(&g.base, Exterior::Empty, |x| x[0] > 0.7 && x[0] < 0.9);
    let p = ReplacementProblem::on_unit_cylinder(phi.clone(), near_edge, 0.0).unwrap();
    let sol = solve_replacement(&p).unwrap();
    check_bounds(&sol.field, &p).unwrap();
    let outside = SetMask::from_fn(&g.base, Exterior::Empty, |x| x[0] > 0.95);
    let err = ReplacementProblem::on_unit_cylinder(phi, outside, 0.0).unwrap_err();
    assert_eq!(err.kind(), "invalid-input");
}

fn interval(base: &CellGrid, lo: f64, hi: f64) -> SetMask {
    SetMask::from_fn(base, Exterior::Empty, |x| x[0] > lo && x[0] < hi)
}

#[test]
fn increment_is_linear_in_the_added_measure() {
    let mut ratios = Vec::new();
    for m in [40, 80] {
        let g = grid(1, 0.5, m);
        let phi = ExtendedField::constant(&g, 1.0);
        let k = interval(&g.base, -0.25, 0.25);
        let p = ReplacementProblem::on_unit_cylinder(phi, k, 0.0).unwrap();
        for l in [0.05, 0.1, 0.2] {
            let a = interval(&g.base, 0.25, 0.25 + l);
            let inc = energy_increment(&p, &a).unwrap();
            assert!(inc >= -1e-9);
            ratios.push(inc / a.measure());
        }
    }
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi <= 2.0 * lo, "{ratios:?}");
}

#[test]
fn radial_increment_ratio_is_stable() {
    let g = grid(1, 0.5, 40);
    let ratios: Vec<f64> = [0.45, 0.4, 0.3]
        .iter()
        .map(|&r| radial_increment(&g, 0.5, r, 1.0).unwrap().ratio())
        .collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(lo > 0.0 && hi <= 2.0 * lo, "{ratios:?}");
    // r within a cell of ρ selects the same cells
    assert_eq!(
        radial_increment(&g, 0.5, 0.499, 1.0).unwrap().increment,
        0.0
    );
    assert_eq!(radial_increment(&g, 0.5, 0.3, 0.0).unwrap().increment, 0.0);
}
