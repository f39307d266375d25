use super::*;
use crate::field::ExteriorDatum;
use crate::geometry::CellGrid;
use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(n: usize, s: f64, w: f64, m: usize, z_top: f64) -> (Params, CellGrid, HalfCylinderGrid) {
    let p = Params::new(n, s, 0.5).unwrap();
    let base = CellGrid::new(n, w, m).unwrap();
    let grid = HalfCylinderGrid::new(&p, &base, z_top).unwrap();
    (p, base, grid)
}

#[test]
fn levels_are_graded_and_reach_the_top() {
    let (_, base, grid) = setup(1, 0.4, 1.0, 16, 1.0);
    let z = &grid.z;
    assert_eq!(z[0], 0.0);
    assert!(z[1] <= base.h());
    assert_eq!(grid.z_top(), 1.0);
    for k in 1..z.len() - 1 {
        let (d0, d1) = (z[k] - z[k - 1], z[k + 1] - z[k]);
        assert!(d1 > 0.0 && d1 <= 1.3 * d0 * (1.0 + 1e-12) + 1e-15 || k + 2 == z.len());
    }
    for k in 0..z.len() - 1 {
        let w = grid.layer_weight(k);
        assert!(w.is_finite() && w > 0.0);
    }
}

#[test]
fn extension_of_one_is_one() {
    for &(n, s, m) in &[(1, 0.3, 16), (1, 0.75, 16), (2, 0.5, 4), (2, 0.2, 4)] {
        let (p, base, grid) = setup(n, s, 1.0, m, 1.0);
        let u = NodeField::constant(&base, 1.0);
        let ext = extend_poisson(&p, &u, &grid).unwrap();
        for v in &ext.values {
            assert!((v - 1.0).abs() < 1e-6, "n={n} s={s}: {v}");
        }
    }
}

#[test]
fn extension_is_linear() {
    let (p, base, grid) = setup(1, 0.4, 2.0, 16, 1.0);
    let u = NodeField::from_fn(&base, ExteriorDatum::constant(0.5), |x| (2.0 * x[0]).sin());
    let v = NodeField::from_fn(&base, ExteriorDatum::power(0.0, 1.0, 0.3), |x| {
        x[0].abs().powf(0.3)
    });
    let combo = u.combine(2.0, &v, -3.0).unwrap();
    let eu = extend_poisson(&p, &u, &grid).unwrap();
    let ev = extend_poisson(&p, &v, &grid).unwrap();
    let ec = extend_poisson(&p, &combo, &grid).unwrap();
    let lin = eu.combine(2.0, &ev, -3.0).unwrap();
    for (a, b) in ec.values.iter().zip(&lin.values) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn half_laplacian_extension_of_a_lorentzian() {
    // with s = 1/2 the kernel is z / (π (x² + z²)) and 1/(1 + y²) extends to
    // (1 + z) / (x² + (1 + z)²); the datum |y|^{-2} matches it up to |y|^{-4}
    let (p, base, grid) = setup(1, 0.5, 8.0, 128, 1.0);
    let u = NodeField::from_fn(&base, ExteriorDatum::power(0.0, 1.0, -2.0), |x| {
        1.0 / (1.0 + x[0] * x[0])
    });
    let ext = extend_poisson(&p, &u, &grid).unwrap();
    let mut worst = 0.0f64;
    for idx in 0..grid.num_nodes() {
        let (x, z) = grid.coord(idx);
        if x[0].abs() > 2.0 {
            continue;
        }
        let exact = (1.0 + z) / (x[0] * x[0] + (1.0 + z) * (1.0 + z));
        worst = worst.max((ext.values[idx] - exact).abs());
    }
    // the P1 interpolant of the trace is off by at most h² max|f''| / 8
    let h = base.h();
    assert!(worst < h * h * 2.0 / 8.0, "{worst}");
}

#[test]
fn extension_respects_the_bounds_of_the_trace() {
    let (p, base, grid) = setup(1, 0.65, 1.0, 16, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let vals: Vec<f64> = (0..base.num_nodes())
        .map(|_| rng.gen_range(0.2..1.5))
        .collect();
    let u = NodeField::new(base.clone(), vals, ExteriorDatum::constant(0.7)).unwrap();
    let ext = extend_poisson(&p, &u, &grid).unwrap();
    assert!(ext.min_value() >= u.min_value().min(0.7) - 1e-9);
    assert!(ext.max_value() <= u.max_value().max(0.7) + 1e-9);
}

#[test]
fn trace_is_recovered_as_z_goes_to_zero() {
    // the Lipschitz trace (1 − x²)₊ is recovered at the rate min(1, 2s)
    for &s in &[0.2, 0.45, 0.8] {
        let (p, base, _) = setup(1, s, 2.0, 32, 1.0);
        let u = NodeField::from_fn(&base, ExteriorDatum::zero(), |x| {
            (1.0 - x[0] * x[0]).max(0.0)
        });
        let errs: Vec<f64> = [0.005, 0.0025, 0.00125]
            .iter()
            .map(|&z1| {
                let grid = HalfCylinderGrid::with_levels(&p, &base, vec![0.0, z1]).unwrap();
                let ext = extend_poisson(&p, &u, &grid).unwrap();
                let nb = grid.num_base_nodes();
                (0..nb)
                    .map(|i| (ext.values[nb + i] - u.values[i]).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let order = (errs[1] / errs[2]).log2();
        assert!(errs[2] < errs[1] && errs[1] < errs[0]);
        assert!(order >= 0.8 * 1.0f64.min(2.0 * s), "s = {s}: {errs:?}");
    }
}

#[test]
fn growth_violation_is_reported() {
    let (p, base, grid) = setup(1, 0.25, 1.0, 8, 1.0);
    let u = NodeField::from_fn(&base, ExteriorDatum::power(0.0, 1.0, 0.6), |_| 0.0);
    assert_eq!(
        extend_poisson(&p, &u, &grid).unwrap_err().kind(),
        "growth-violated"
    );
    let p_small = p.with_lambda(1e-3).unwrap();
    let one = NodeField::constant(&base, 1.0);
    assert_eq!(
        extend_poisson(&p_small, &one, &grid).unwrap_err().kind(),
        "growth-violated"
    );
}

#[test]
fn weighted_energy_of_constants_and_linear_fields() {
    for &(n, s) in &[(1, 0.3), (2, 0.8)] {
        let (_, base, grid) = setup(n, s, 1.0, 4, 1.0);
        let region = Cylinder::scaled(1.0, 0.9);
        let c = ExtendedField::constant(&grid, 3.0);
        assert_eq!(weighted_energy(&c, &region).unwrap(), 0.0);
        let v = ExtendedField::from_fn(&grid, |x, _| x[0]);
        let cells = region.base_cells(&base).iter().filter(|&&b| b).count() as f64;
        let a = 1.0 - 2.0 * s;
        let exact = 2.0 * cells * base.cell_volume() / (1.0 + a);
        assert_relative_eq!(
            weighted_energy(&v, &region).unwrap(),
            exact,
            max_relative = 1e-12
        );
    }
}

#[test]
fn jacobi_sweep_decreases_the_energy() {
    let (_, _, grid) = setup(2, 0.35, 1.0, 4, 1.0);
    let region = Cylinder::scaled(1.0, 0.9);
    let form = WeightedForm::new(&grid, &region).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let v: Vec<f64> = (0..grid.num_nodes())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let mut lv = vec![0.0; v.len()];
        form.apply(&v, &mut lv);
        let smoothed: Vec<f64> = (0..v.len())
            .map(|i| {
                if form.in_region(i) && !form.is_boundary(i) {
                    v[i] - lv[i] / form.diagonal(i)
                } else {
                    v[i]
                }
            })
            .collect();
        assert!(form.energy(&smoothed) < form.energy(&v));
    }
}

#[test]
fn discrete_minimizer_approaches_the_poisson_extension() {
    let (p, base, grid) = setup(1, 0.5, 4.0, 64, 2.0);
    let u = NodeField::from_fn(&base, ExteriorDatum::zero(), |x| (-2.0 * x[0] * x[0]).exp());
    let poisson = extend_poisson(&p, &u, &grid).unwrap();
    let minimal = extend_min(&p, &u, &grid).unwrap();
    let worst = (0..grid.num_nodes())
        .map(|i| (poisson.values[i] - minimal.values[i]).abs())
        .fold(0.0, f64::max);
    assert!(worst < 5e-3, "{worst}");
    // the minimizer has no more energy than the Poisson extension
    let whole = Cylinder::whole(&grid);
    assert!(
        weighted_energy(&minimal, &whole).unwrap() <= weighted_energy(&poisson, &whole).unwrap()
    );
}

#[test]
fn consistency_ratio_matches_the_fourier_constant() {
    let s = 0.5;
    let (p, base, grid) = setup(1, s, 4.0, 64, 4.0);
    let omega = Ball::centered(1.0);
    let bump =
        |c: f64, a: f64| move |x: &Point| a * (1.0 - ((x[0] - c) / 0.5).powi(2)).max(0.0).powi(2);
    let v_ref = NodeField::zeros(&base);
    let u = NodeField::from_fn(&base, ExteriorDatum::zero(), bump(0.1, 1.0));
    let c = seminorm_consistency(&p, &u, &v_ref, &omega, &grid).unwrap();
    let expected = gagliardo_to_extension_ratio(1, s);
    assert_relative_eq!(expected, 2.0 * std::f64::consts::PI, max_relative = 1e-12);
    assert_relative_eq!(c.ratio, expected, max_relative = 0.05);
    assert_eq!(
        seminorm_consistency(&p, &u, &u, &omega, &grid)
            .unwrap_err()
            .kind(),
        "degenerate-comparison"
    );
}

#[test]
fn sup_bound_holds_for_a_bounded_trace() {
    let (p, base, grid) = setup(1, 0.4, 2.0, 32, 1.0);
    let u = NodeField::from_fn(&base, ExteriorDatum::constant(1.0), |x| {
        1.0 + 0.5 * (3.0 * x[0]).cos()
    });
    let ext = extend_poisson(&p, &u, &grid).unwrap();
    let b = extension_sup_bound(&p, &u, &ext, 5.0 / 9.0, 0.9).unwrap();
    assert!(b.holds(), "{b:?}");
    assert!(b.sup_extension <= 1.5 + 1e-9);
}
