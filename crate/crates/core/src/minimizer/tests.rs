use super::*;
use crate::field::ExteriorDatum;
use crate::geometry::{free_boundary_distance, CellGrid, Exterior};
use nalgebra::{DMatrix, DVector};

fn params(n: usize, s: f64, sigma: f64) -> Params {
    Params::new(n, s, sigma).unwrap()
}

fn unit_omega() -> Ball {
    Ball::centered(1.0)
}

#[test]
fn zero_datum_gives_zero_field() {
    let g = CellGrid::new(1, 2.0, 8).unwrap();
    let (problem, _) =
        preset_problem(&params(1, 0.5, 0.5), Preset::Empty, &g, unit_omega(), 0.0).unwrap();
    let e = problem.set_with(|_| true);
    let u = problem.solve_u_given_e(&e).unwrap();
    assert!(u.values.iter().all(|&v| v == 0.0));
}

#[test]
fn constants_are_harmonic() {
    for &(n, m) in &[(1, 16), (2, 6)] {
        let g = CellGrid::new(n, 2.0, m).unwrap();
        let datum = ExteriorDatum::constant(1.0);
        let problem = PairProblem::new(
            params(n, 0.4, 0.5),
            unit_omega(),
            NodeField::constant(&g, 1.0),
            SetMask::full(&g),
        )
        .unwrap();
        let u = problem.solve_u_given_e(&SetMask::full(&g)).unwrap();
        assert_eq!(u.datum, datum);
        for v in &u.values {
            assert!((v - 1.0).abs() < 1e-9, "n={n}: {v}");
        }
    }
}

#[test]
fn small_instance_matches_a_dense_solve() {
    // six free nodes: Ω = B_1 on h = 1/4 with the last cell of Ω left out of E
    let p = params(1, 0.65, 0.4);
    let g = CellGrid::new(1, 2.0, 8).unwrap();
    let datum = NodeField::from_fn(&g, ExteriorDatum::zero(), |x| {
        if x[0] < -1.0 {
            0.5 * (-1.0 - x[0])
        } else {
            0.0
        }
    });
    let outside = SetMask::from_fn(&g, Exterior::Empty, |x| x[0] < -1.0);
    let problem = PairProblem::new(p, unit_omega(), datum, outside).unwrap();
    let e = problem.set_with(|c| g.cell_center(c)[0] < 0.75);
    let u = problem.solve_u_given_e(&e).unwrap();

    let nn = g.num_nodes();
    let free: Vec<usize> = (0..nn)
        .filter(|&i| {
            let x = g.node_coord(i)[0];
            x > -1.0 + 1e-12 && x < 0.75 - 1e-12
        })
        .collect();
    assert_eq!(free.len(), 6);
    let (a, b) = problem.form.quadratic_parts();
    let fixed: Vec<f64> = (0..nn)
        .map(|i| if free.contains(&i) { 0.0 } else { u.values[i] })
        .collect();
    let mat = DMatrix::from_fn(6, 6, |r, c| a[free[r] * nn + free[c]]);
    let rhs = DVector::from_fn(6, |r, _| {
        let i = free[r];
        -b[i] - (0..nn).map(|j| a[i * nn + j] * fixed[j]).sum::<f64>()
    });
    let x = mat.lu().solve(&rhs).unwrap();
    for (r, &i) in free.iter().enumerate() {
        assert!(
            (u.values[i] - x[r]).abs() < 1e-10,
            "{} vs {}",
            u.values[i],
            x[r]
        );
    }
    // stationarity: any perturbation raises the energy
    let e0 = problem.form.energy(&u.values);
    for &i in &free {
        for t in [1e-3, -1e-3] {
            let mut v = u.values.clone();
            v[i] += t;
            assert!(problem.form.energy(&v) > e0);
        }
    }
}

#[test]
fn empty_exterior_empties_the_set() {
    let g = CellGrid::new(1, 2.0, 16).unwrap();
    let (problem, init) =
        preset_problem(&params(1, 0.5, 0.5), Preset::Empty, &g, unit_omega(), 0.0).unwrap();
    assert!(init.report.total > 0.0);
    let out = minimize_pair(&problem, init, &Schedule::default()).unwrap();
    assert!(out.converged);
    assert_eq!(out.e.count(), 0);
    assert_eq!(out.report.total, 0.0);
    assert!(out.u.values.iter().all(|&v| v == 0.0));
}

fn assert_descent(problem: &PairProblem, state: &PairState) {
    for w in state.history.windows(2) {
        assert!(w[1] < w[0] - ACCEPT_TOL);
    }
    let (_, report) = problem.evaluate(&state.e).unwrap();
    assert_eq!(report.total, state.report.total);
    assert_eq!(*state.history.last().unwrap(), state.report.total);
    // single-flip stability
    let again = minimize_pair(problem, state.clone(), &Schedule::default()).unwrap();
    assert_eq!(again.history.len(), 1);
    assert!(state.u.min_value() >= -1e-9);
}

#[test]
fn greedy_descent_is_monotone_and_stable() {
    let g = CellGrid::new(1, 2.0, 16).unwrap();
    for preset in Preset::ALL {
        let (problem, init) =
            preset_problem(&params(1, 0.75, 0.5), preset, &g, unit_omega(), 2.0).unwrap();
        let out = minimize_pair(&problem, init, &Schedule::default()).unwrap();
        assert!(out.converged);
        assert_descent(&problem, &out);
    }
}

#[test]
fn planar_descent_is_monotone() {
    let g = CellGrid::new(2, 2.0, 5).unwrap();
    let (problem, init) =
        preset_problem(&params(2, 0.75, 0.5), Preset::Ring, &g, unit_omega(), 1.0).unwrap();
    let out = minimize_pair(&problem, init, &Schedule::default()).unwrap();
    assert_descent(&problem, &out);
}

#[test]
fn greedy_matches_exhaustive_search() {
    // twelve cells of Ω on h = 1/6
    let g = CellGrid::new(1, 2.0, 12).unwrap();
    for &(s, sigma, preset, amp) in &[
        (0.75, 0.5, Preset::HalfSpace, 1.0),
        (0.5, 0.3, Preset::HalfSpace, 4.0),
        (0.3, 0.8, Preset::Ring, 1.0),
        (0.6, 0.5, Preset::Ring, 3.0),
        (0.5, 0.5, Preset::Empty, 0.0),
    ] {
        let (problem, init) =
            preset_problem(&params(1, s, sigma), preset, &g, unit_omega(), amp).unwrap();
        assert_eq!(problem.num_flippable(), 12);
        let out = minimize_pair(&problem, init, &Schedule::default()).unwrap();
        let best = brute_force_minimum(&problem).unwrap();
        assert!(
            (out.report.total - best.report.total).abs() <= 1e-10,
            "{preset:?} s={s}: greedy {} exhaustive {}",
            out.report.total,
            best.report.total
        );
    }
}

#[test]
fn annealing_keeps_the_history_monotone() {
    let g = CellGrid::new(1, 2.0, 12).unwrap();
    let (problem, init) =
        preset_problem(&params(1, 0.6, 0.5), Preset::Ring, &g, unit_omega(), 3.0).unwrap();
    let schedule = Schedule {
        max_sweeps: 100,
        anneal: Some(Anneal {
            temperature: 0.05,
            cooling: 0.9,
            steps: 40,
            seed: 3,
        }),
    };
    let out = minimize_pair(&problem, init, &schedule).unwrap();
    assert_descent(&problem, &out);
}

#[test]
fn inadmissible_start_is_rejected() {
    let g = CellGrid::new(1, 2.0, 8).unwrap();
    let (problem, mut init) =
        preset_problem(&params(1, 0.5, 0.5), Preset::Empty, &g, unit_omega(), 0.0).unwrap();
    let off = (0..g.num_nodes())
        .find(|&i| g.node_coord(i)[0] == 0.75)
        .unwrap();
    init.u.values[off] = 0.3;
    let err = minimize_pair(&problem, init, &Schedule::default()).unwrap_err();
    assert_eq!(err.kind(), "pair-not-admissible");
}

#[test]
fn half_space_has_half_density() {
    for &(n, m) in &[(1, 32), (2, 16)] {
        let g = CellGrid::new(n, 2.0, m).unwrap();
        let e = SetMask::half_space(&g, 0, 0.0, false);
        let radii = [0.125, 0.25, 0.5, 1.0];
        let prof = density_profile(&e, [0.0, 0.0], &radii).unwrap();
        assert!(prof.rows[0].excluded);
        for row in prof.rows.iter().filter(|r| !r.excluded) {
            let tol = if n == 1 { 1e-12 } else { 4.0 * g.h() / row.r };
            assert!((row.ratio - half_space_ratio(n)).abs() <= tol, "{row:?}");
        }
    }
}

#[test]
fn density_needs_a_boundary_point() {
    let g = CellGrid::new(1, 2.0, 32).unwrap();
    let e = SetMask::half_space(&g, 0, 0.0, false);
    let err = density_profile(&e, [-0.5, 0.0], &[0.25]).unwrap_err();
    assert_eq!(err.kind(), "not-a-boundary-point");
}

#[test]
fn synthetic_power_law_is_recovered() {
    for &n in &[1, 2] {
        let p = params(n, 0.75, 0.5);
        let g = CellGrid::new(n, 2.0, if n == 1 { 256 } else { 32 }).unwrap();
        let e = SetMask::half_space(&g, 0, 0.0, false);
        let expo = p.growth_exponent();
        let u = NodeField::from_fn(&g, ExteriorDatum::zero(), |x| {
            if x[0] < 0.0 {
                free_boundary_distance(&e, *x).unwrap().powf(expo)
            } else {
                0.0
            }
        });
        let radii = [0.125, 0.25, 0.5, 1.0];
        let fit = growth_fit(&p, &u, [0.0, 0.0], &radii).unwrap();
        assert!((fit.slope - expo).abs() <= 0.02, "n={n}: {}", fit.slope);
        assert!(fit.rescaled_spread < 1.1);
    }
    let g = CellGrid::new(1, 2.0, 16).unwrap();
    let err = growth_fit(
        &params(1, 0.75, 0.5),
        &NodeField::zeros(&g),
        [0.0, 0.0],
        &[0.25, 0.5, 1.0],
    )
    .unwrap_err();
    assert_eq!(err.kind(), "insufficient-radii");
}

#[test]
fn extension_bound_of_constants() {
    let p = params(1, 0.5, 0.5);
    let g = CellGrid::new(1, 2.0, 16).unwrap();
    let zero = extension_bound_check(&p, &NodeField::zeros(&g)).unwrap();
    assert_eq!(zero.bound.sup_extension, 0.0);
    let one = extension_bound_check(&p, &NodeField::constant(&g, 1.0)).unwrap();
    assert!((one.bound.sup_extension - 1.0).abs() < 1e-6);
    assert!(one.bound.holds());
}

#[test]
fn minimizers_respect_the_extension_bound() {
    let g = CellGrid::new(1, 2.0, 16).unwrap();
    for (k, preset) in [Preset::HalfSpace, Preset::Ring].into_iter().enumerate() {
        let p = params(1, 0.75, 0.5);
        let (problem, init) = preset_problem(&p, preset, &g, unit_omega(), 1.0 + k as f64).unwrap();
        let out = minimize_pair(&problem, init, &Schedule::default()).unwrap();
        let b = extension_bound_check(&p, &out.u).unwrap();
        assert!(b.bound.holds(), "{b:?}");
    }
}

#[test]
fn state_beats_replacement_competitors() {
    use rand::SeedableRng;
    let g = CellGrid::new(1, 2.0, 32).unwrap();
    let p = params(1, 0.75, 0.5);
    let (problem, init) = preset_problem(&p, Preset::HalfSpace, &g, unit_omega(), 1.0).unwrap();
    let out = minimize_pair(&problem, init, &Schedule::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cmp = comparison_check(&problem, &out, 10, &mut rng).unwrap();
    assert_eq!(cmp.competitor_values.len(), 10);
    assert!(cmp.worst_relative_defect >= 0.0, "{cmp:?}");
}
