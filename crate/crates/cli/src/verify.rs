//! The property suite behind `nlfb verify`.
//!
//! Every criterion returns named checks with the measured value and its
//! tolerance. Checks marked empirical are reported but do not decide the exit
//! status.

use std::time::Instant;

use nlfb_core::extension::{gagliardo_to_extension_ratio, CYLINDER_FRACTION};
use nlfb_core::minimizer::{
    brute_force_minimum, default_anchor, density_profile, growth_fit, half_space_ratio,
    preset_problem,
};
use nlfb_core::rearrangement::{nonexpansive_check, rearrangement_energy_check};
use nlfb_core::replacement::{
    check_bounds, energy_increment, harmonicity_residual, monotonicity_check,
    orthogonality_residual, random_trace_set, solve_from, unit_cylinder_grid,
};
use nlfb_core::{
    extend_poisson, interaction, minimize_pair, per_sigma, seminorm_consistency, solve_replacement,
    steiner_slicewise, Ball, CellGrid, Exterior, ExteriorDatum, HalfCylinderGrid, NodeField,
    PairState, Params, Preset, ReplacementProblem, Result, Schedule, SetMask,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Tolerances;
use crate::experiments::{
    default_radii, descent_checks, equimeasurable, extension_bound_row, random_nonnegative,
    random_phi, synthetic_power_field,
};
use crate::output::{Check, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Quick,
    Full,
}

impl Scale {
    fn pick<T>(self, quick: T, full: T) -> T {
        match self {
            Scale::Quick => quick,
            Scale::Full => full,
        }
    }
}

pub const CRITERIA: [(usize, &str, f64); 13] = [
    (1, "kernel quadrature", 1.0),
    (2, "perimeter identities", 5.0),
    (3, "extension normalization", 10.0),
    (4, "seminorm consistency", 120.0),
    (5, "replacement optimality", 60.0),
    (6, "maximum principles", 120.0),
    (7, "monotonicity", 300.0),
    (8, "linear energy increment", 300.0),
    (9, "rearrangement", 120.0),
    (10, "brute-force equivalence", 600.0),
    (11, "density estimate", 900.0),
    (12, "growth exponent", 900.0),
    (13, "extension bound", 300.0),
];

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub title: &'static str,
    pub budget_secs: f64,
    pub elapsed_secs: f64,
    pub checks: Vec<Check>,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.asserted)
    }
}

fn criterion_rng(seed: u64, id: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn run_criterion(id: usize, scale: Scale, tol: &Tolerances, seed: u64) -> CriterionResult {
    let &(_, title, budget_secs) = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .expect("criterion id in 1..=13");
    let mut rng = criterion_rng(seed, id);
    let start = Instant::now();
    let result = match id {
        1 => kernel(tol),
        2 => perimeter(scale, tol, &mut rng),
        3 => extension(scale, tol),
        4 => consistency(scale, tol, &mut rng),
        5 => replacement(scale, tol, &mut rng),
        6 => maximum_principles(scale, tol, &mut rng),
        7 => monotonicity(scale, tol, &mut rng),
        8 => increments(scale, tol),
        9 => rearrangement(scale, tol, &mut rng),
        10 => brute_force(scale, tol),
        11 => density(scale, tol),
        12 => growth(scale, tol),
        13 => extension_bound(scale, tol, &mut rng),
        _ => unreachable!(),
    };
    let checks = result.unwrap_or_else(|e| vec![Check::failed("evaluation", e.to_string())]);
    CriterionResult {
        id,
        title,
        budget_secs,
        elapsed_secs: start.elapsed().as_secs_f64(),
        checks,
    }
}

pub fn run_suite(scale: Scale, tol: &Tolerances, seed: u64) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|c| run_criterion(c.0, scale, tol, seed))
        .collect()
}

/// One row per check; no timings, so the bytes depend only on config and seed.
pub fn suite_table(results: &[CriterionResult]) -> Table {
    let mut t = Table::new(
        "verify",
        &[
            "criterion",
            "title",
            "check",
            "kind",
            "measured",
            "tolerance",
            "passed",
        ],
    );
    for r in results {
        for c in &r.checks {
            t.push(vec![
                r.id.into(),
                r.title.into(),
                c.name.clone().into(),
                c.kind().into(),
                c.measured.into(),
                c.tolerance.into(),
                c.passed.into(),
            ]);
        }
    }
    t
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// `∫_0^1 ∫_2^3 |x − y|^{−1−σ} dy dx` in closed form.
pub fn unit_gap_interaction(sigma: f64) -> f64 {
    let q = 1.0 - sigma;
    (2.0 * 2f64.powf(q) - 1.0 - 3f64.powf(q)) / (sigma * q)
}

fn interval(grid: &CellGrid, lo: f64, hi: f64) -> SetMask {
    SetMask::from_fn(grid, Exterior::Empty, |x| x[0] > lo && x[0] < hi)
}

fn kernel(tol: &Tolerances) -> Result<Vec<Check>> {
    let sigma = 0.5;
    let g = CellGrid::new(1, 4.0, 4)?;
    let (a, b) = (interval(&g, 0.0, 1.0), interval(&g, 2.0, 3.0));
    let ab = interaction(sigma, &a, &b)?;
    let ba = interaction(sigma, &b, &a)?;
    Ok(vec![
        Check::at_most(
            "closed-form",
            (ab - unit_gap_interaction(sigma)).abs(),
            tol.kernel,
        )
        .with_detail(format!("L([0,1],[2,3]) = {ab}")),
        Check::at_most("swap-symmetry", (ab - ba).abs() / ab, tol.symmetry),
    ])
}

fn random_mask<R: Rng>(grid: &CellGrid, exterior: Exterior, rng: &mut R) -> Result<SetMask> {
    let inside = (0..grid.num_cells()).map(|_| rng.gen_bool(0.5)).collect();
    SetMask::new(grid.clone(), inside, exterior)
}

fn select(e: &SetMask, keep: &[bool], in_e: bool, exterior: Exterior) -> SetMask {
    SetMask {
        grid: e.grid.clone(),
        inside: e
            .inside
            .iter()
            .zip(keep)
            .map(|(&x, &k)| x == in_e && k)
            .collect(),
        exterior,
    }
}

fn perimeter<R: Rng>(scale: Scale, tol: &Tolerances, rng: &mut R) -> Result<Vec<Check>> {
    let omega = Ball::centered(1.0);
    let trials = scale.pick(3, 8);
    let (mut empty_value, mut symmetry, mut decomposition) = (0.0f64, 0.0f64, 0.0f64);
    for n in [1, 2] {
        let g = CellGrid::new(
            n,
            2.0,
            if n == 1 {
                scale.pick(16, 32)
            } else {
                scale.pick(4, 6)
            },
        )?;
        let in_omega = g.cells_in_ball(&omega);
        let outside: Vec<bool> = in_omega.iter().map(|b| !b).collect();
        for k in 0..trials {
            let sigma = rng.gen_range(0.1..0.9);
            empty_value =
                empty_value.max(per_sigma(sigma, &SetMask::empty(&g), &omega)?.total().abs());
            let ext = if k % 2 == 0 {
                Exterior::Empty
            } else {
                Exterior::HalfSpace {
                    axis: 0,
                    offset: 0.0,
                    upper: false,
                }
            };
            let e = random_mask(&g, ext, rng)?;
            let terms = per_sigma(sigma, &e, &omega)?;
            let comp = per_sigma(sigma, &e.complement(), &omega)?;
            let scale_ = terms.total().abs().max(1e-300);
            symmetry = symmetry.max((terms.total() - comp.total()).abs() / scale_);
            let e_in = select(&e, &in_omega, true, Exterior::Empty);
            let out_in = select(&e, &in_omega, false, Exterior::Empty);
            let e_far = select(&e, &outside, true, e.exterior);
            let out_far = select(&e, &outside, false, e.exterior.complement());
            let parts = [
                (terms.l_in_out, interaction(sigma, &e_in, &out_in)?),
                (terms.l_in_far, interaction(sigma, &e_in, &out_far)?),
                (terms.l_far_out, interaction(sigma, &e_far, &out_in)?),
            ];
            let separate: f64 = parts.iter().map(|p| p.1).sum();
            let worst_part = max_of(parts.iter().map(|(a, b)| (a - b).abs() / scale_));
            decomposition = decomposition
                .max(worst_part)
                .max((separate - terms.total()).abs() / scale_);
        }
    }
    Ok(vec![
        Check::at_most("empty-set", empty_value, 0.0),
        Check::at_most("complement-symmetry", symmetry, tol.symmetry),
        Check::at_most("three-term-decomposition", decomposition, tol.decomposition),
    ])
}

fn extension(scale: Scale, tol: &Tolerances) -> Result<Vec<Check>> {
    let m1 = scale.pick(16, 32);
    let m2 = scale.pick(4, 6);
    let mut one_err = 0.0f64;
    for &(n, s, m) in &[(1, 0.3, m1), (1, 0.75, m1), (2, 0.5, m2)] {
        let p = Params::new(n, s, 0.5)?;
        let base = CellGrid::new(n, 1.0, m)?;
        let grid = HalfCylinderGrid::new(&p, &base, 1.0)?;
        let ext = extend_poisson(&p, &NodeField::constant(&base, 1.0), &grid)?;
        one_err = one_err.max(max_of(ext.values.iter().map(|v| (v - 1.0).abs())));
    }
    let p = Params::new(1, 0.4, 0.5)?;
    let base = CellGrid::new(1, 2.0, m1)?;
    let grid = HalfCylinderGrid::new(&p, &base, 1.0)?;
    let u = NodeField::from_fn(&base, ExteriorDatum::constant(0.5), |x| (2.0 * x[0]).sin());
    let v = NodeField::from_fn(&base, ExteriorDatum::power(0.0, 1.0, 0.3), |x| {
        x[0].abs().powf(0.3)
    });
    let eu = extend_poisson(&p, &u, &grid)?;
    let ev = extend_poisson(&p, &v, &grid)?;
    let ec = extend_poisson(&p, &u.combine(2.0, &v, -3.0)?, &grid)?;
    let lin = eu.combine(2.0, &ev, -3.0)?;
    let lin_err = max_of(
        ec.values
            .iter()
            .zip(&lin.values)
            .map(|(a, b)| (a - b).abs()),
    );
    Ok(vec![
        Check::at_most("extension-of-one", one_err, tol.extension_one),
        Check::at_most("linearity", lin_err, tol.linearity),
    ])
}

fn bump(c: f64, a: f64) -> impl Fn(&[f64; 2]) -> f64 {
    move |x| a * (1.0 - ((x[0] - c) / 0.5).powi(2)).max(0.0).powi(2)
}

fn consistency<R: Rng>(scale: Scale, tol: &Tolerances, rng: &mut R) -> Result<Vec<Check>> {
    let s = 0.5;
    let p = Params::new(1, s, 0.5)?;
    let omega = Ball::centered(1.0);
    let pairs = 5;
    let (coarse, fine) = scale.pick((32, 64), (48, 96));
    let data: Vec<(f64, f64, f64, f64)> = (0..pairs)
        .map(|_| {
            (
                rng.gen_range(-0.4..0.4),
                rng.gen_range(1.0..2.0),
                rng.gen_range(-0.4..0.4),
                rng.gen_range(0.0..0.5),
            )
        })
        .collect();
    let ratios = |m: usize| -> Result<Vec<f64>> {
        let base = CellGrid::new(1, 4.0, m)?;
        let grid = HalfCylinderGrid::new(&p, &base, 4.0)?;
        data.iter()
            .map(|&(cu, au, cv, av)| {
                let u = NodeField::from_fn(&base, ExteriorDatum::zero(), bump(cu, au));
                let v = NodeField::from_fn(&base, ExteriorDatum::zero(), bump(cv, av));
                Ok(seminorm_consistency(&p, &u, &v, &omega, &grid)?.ratio)
            })
            .collect()
    };
    let rc = ratios(coarse)?;
    let rf = ratios(fine)?;
    let (lo, hi) = rf
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let refinement = max_of(rc.iter().zip(&rf).map(|(a, b)| (b / a - 1.0).abs()));
    let mean = rf.iter().sum::<f64>() / rf.len() as f64;
    let analytic = gagliardo_to_extension_ratio(1, s);
    Ok(vec![
        Check::at_most("constant-across-pairs", hi / lo - 1.0, tol.consistency),
        Check::at_most("stable-under-refinement", refinement, tol.consistency),
        Check::at_most(
            "mean-against-fourier-constant",
            (mean / analytic - 1.0).abs(),
            tol.consistency,
        )
        .empirical()
        .with_detail(format!("mean ratio {mean}, analytic {analytic}")),
    ])
}

fn random_problem<R: Rng>(
    g: &HalfCylinderGrid,
    gamma: f64,
    rng: &mut R,
) -> Result<ReplacementProblem> {
    let k = random_trace_set(&g.base, CYLINDER_FRACTION, 2, rng);
    ReplacementProblem::on_unit_cylinder(random_phi(g, rng), k, gamma)
}

fn replacement<R: Rng>(scale: Scale, tol: &Tolerances, rng: &mut R) -> Result<Vec<Check>> {
    let configs: &[(usize, f64, usize)] = match scale {
        Scale::Quick => &[(1, 0.5, 16), (2, 0.5, 4)],
        Scale::Full => &[(1, 0.3, 32), (1, 0.7, 32), (2, 0.5, 8)],
    };
    let per_config = scale.pick(2, 3);
    let (mut orth, mut pyth, mut harm, mut uniq) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &(n, s, m) in configs {
        let p = Params::new(n, s, 0.5)?;
        let g = unit_cylinder_grid(&p, m)?;
        for _ in 0..per_config {
            let gamma = rng.gen_range(0.0..0.5);
            let prob = random_problem(&g, gamma, rng)?;
            let sol = solve_replacement(&prob)?;
            let o = orthogonality_residual(&sol.field, &prob, 10, rng);
            orth = orth.max(o.residual);
            pyth = pyth.max(o.pythagoras);
            harm = harm.max(harmonicity_residual(&sol.field, &prob));
            let a: Vec<f64> = (0..g.num_nodes())
                .map(|_| rng.gen_range(-5.0..5.0))
                .collect();
            let b: Vec<f64> = (0..g.num_nodes())
                .map(|_| rng.gen_range(-5.0..5.0))
                .collect();
            let (sa, sb) = (solve_from(&prob, &a)?, solve_from(&prob, &b)?);
            let scale_ = sa
                .field
                .values
                .iter()
                .fold(1e-300f64, |m, v| m.max(v.abs()));
            uniq = uniq.max(
                max_of(
                    sa.field
                        .values
                        .iter()
                        .zip(&sb.field.values)
                        .map(|(x, y)| (x - y).abs()),
                ) / scale_,
            );
        }
    }
    Ok(vec![
        Check::at_most("orthogonality", orth, tol.residual),
        Check::at_most("harmonicity", harm, tol.residual),
        Check::at_most("pythagoras", pyth, tol.residual),
        Check::at_most("uniqueness", uniq, tol.uniqueness),
    ])
}

fn maximum_principles<R: Rng>(scale: Scale, tol: &Tolerances, rng: &mut R) -> Result<Vec<Check>> {
    let count = scale.pick(12, 50);
    let (m1, m2) = scale.pick((16, 4), (32, 8));
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    for k in 0..count {
        let n = if k % 5 == 4 { 2 } else { 1 };
        let p = Params::new(n, rng.gen_range(0.2..0.8), 0.5)?;
        let g = unit_cylinder_grid(&p, if n == 1 { m1 } else { m2 })?;
        let prob = random_problem(&g, 0.0, rng)?;
        let sol = solve_replacement(&prob)?;
        match check_bounds(&sol.field, &prob) {
            Ok((lo, hi)) => worst = worst.max(-lo).max(hi - prob.boundary_sup()),
            Err(_) => failures += 1,
        }
    }
    Ok(vec![
        Check::at_most("bounds-violation", worst, tol.bounds)
            .with_detail(format!("{count} configurations")),
        Check::at_most("reported-violations", failures as f64, 0.0),
    ])
}

fn union(a: &SetMask, b: &SetMask) -> SetMask {
    SetMask {
        grid: a.grid.clone(),
        inside: a
            .inside
            .iter()
            .zip(&b.inside)
            .map(|(x, y)| *x || *y)
            .collect(),
        exterior: Exterior::Empty,
    }
}

fn monotonicity<R: Rng>(scale: Scale, tol: &Tolerances, rng: &mut R) -> Result<Vec<Check>> {
    let count = scale.pick(9, 50);
    let m = scale.pick(16, 32);
    let mut worst = f64::INFINITY;
    let mut active = 0usize;
    for k in 0..count {
        let s = [0.3, 0.5, 0.75][k % 3];
        let p = Params::new(1, s, 0.5)?;
        let g = unit_cylinder_grid(&p, m)?;
        let phi2 = random_phi(&g, rng);
        let phi1 = phi2.scale(rng.gen_range(0.2..1.0));
        let k2 = random_trace_set(&g.base, CYLINDER_FRACTION, 1, rng);
        let k1 = union(&k2, &random_trace_set(&g.base, CYLINDER_FRACTION, 1, rng));
        let a1 = random_trace_set(&g.base, CYLINDER_FRACTION, 1, rng);
        let a2 = union(&a1, &random_trace_set(&g.base, CYLINDER_FRACTION, 1, rng));
        let p1 = ReplacementProblem::on_unit_cylinder(phi1, k1, 0.0)?;
        let p2 = ReplacementProblem::on_unit_cylinder(phi2, k2, 0.0)?;
        let m = monotonicity_check(&p1, &p2, &a1, &a2)?;
        active += usize::from(m.lhs > 0.0);
        worst = worst.min(m.defect);
    }
    Ok(vec![Check::at_least("defect", worst, -tol.monotonicity)
        .with_detail(format!(
            "{count} nested configurations, {active} with a positive left increment"
        ))])
}

fn increments(scale: Scale, tol: &Tolerances) -> Result<Vec<Check>> {
    let (coarse, fine) = scale.pick((20, 40), (40, 80));
    let mut ratios = Vec::new();
    let mut least = f64::INFINITY;
    for m in [coarse, fine] {
        let p = Params::new(1, 0.5, 0.5)?;
        let g = unit_cylinder_grid(&p, m)?;
        let phi = nlfb_core::ExtendedField::constant(&g, 1.0);
        let sup_sq = 1.0;
        let k = interval(&g.base, -0.25, 0.25);
        let prob = ReplacementProblem::on_unit_cylinder(phi, k, 0.0)?;
        for l in [0.05, 0.1, 0.2] {
            let a = SetMask::from_fn(&g.base, Exterior::Empty, |x| {
                x[0].abs() > 0.25 && x[0].abs() < 0.25 + l
            });
            let inc = energy_increment(&prob, &a)?;
            least = least.min(inc);
            ratios.push(inc / (a.measure() * sup_sq));
        }
    }
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    Ok(vec![
        Check::at_most("ratio-spread", hi / lo, tol.increment_spread),
        Check::at_least("nonnegative", least, -tol.increment),
    ])
}

fn rearrangement<R: Rng>(scale: Scale, tol: &Tolerances, rng: &mut R) -> Result<Vec<Check>> {
    let count = scale.pick(30, 100);
    let (m1, m2) = scale.pick((8, 4), (16, 6));
    let (mut defect, mut nonexp, mut mismatched) = (f64::INFINITY, f64::INFINITY, 0usize);
    for k in 0..count {
        let n = if k % 10 == 9 { 2 } else { 1 };
        let p = Params::new(n, [0.3, 0.5, 0.75][k % 3], 0.5)?;
        let g = unit_cylinder_grid(&p, if n == 1 { m1 } else { m2 })?;
        let v = random_nonnegative(&g, rng);
        let w = random_nonnegative(&g, rng);
        mismatched += usize::from(!equimeasurable(&v, &steiner_slicewise(&v)?));
        let d = rearrangement_energy_check(&v)?;
        defect = defect.min(d.defect / d.energy.max(1e-300));
        nonexp = nonexp.min(nonexpansive_check(&v, &w)?);
    }
    Ok(vec![
        Check::at_least("energy-defect", defect, -tol.rearrangement)
            .with_detail(format!("{count} fields")),
        Check::at_most("equimeasurability-mismatches", mismatched as f64, 0.0),
        Check::at_least("nonexpansiveness", nonexp, -tol.nonexpansive),
    ])
}

fn brute_force(scale: Scale, tol: &Tolerances) -> Result<Vec<Check>> {
    let all: [(f64, f64, Preset, f64); 6] = [
        (0.75, 0.5, Preset::HalfSpace, 1.0),
        (0.3, 0.8, Preset::Ring, 1.0),
        (0.5, 0.3, Preset::HalfSpace, 4.0),
        (0.6, 0.5, Preset::Ring, 3.0),
        (0.5, 0.5, Preset::Empty, 0.0),
        (0.75, 0.5, Preset::Lobe, 4.0),
    ];
    let configs = &all[..scale.pick(2, 6)];
    // twelve cells of Ω = B_1 on h = 1/6
    let g = CellGrid::new(1, 2.0, 12)?;
    let mut worst = 0.0f64;
    let mut flippable = 0;
    for &(s, sigma, preset, amp) in configs {
        let p = Params::new(1, s, sigma)?;
        let (problem, init) = preset_problem(&p, preset, &g, Ball::centered(1.0), amp)?;
        flippable = flippable.max(problem.num_flippable());
        let greedy = minimize_pair(&problem, init, &Schedule::default())?;
        let best = brute_force_minimum(&problem)?;
        worst = worst.max((greedy.report.total - best.report.total).abs());
    }
    Ok(vec![
        Check::at_most("greedy-equals-exhaustive", worst, tol.brute_force).with_detail(format!(
            "{} configurations, {flippable} cells",
            configs.len()
        )),
        Check::at_most("flippable-cells", flippable as f64, 12.0),
    ])
}

fn lobe_minimizer(m: usize) -> Result<(Params, nlfb_core::PairProblem, PairState)> {
    let p = Params::new(1, 0.75, 0.5)?;
    let g = CellGrid::new(1, 2.0, m)?;
    let (problem, init) = preset_problem(&p, Preset::Lobe, &g, Ball::centered(1.0), 5.0)?;
    let out = minimize_pair(&problem, init, &Schedule::default())?;
    Ok((p, problem, out))
}

/// Dyadic radii in `[8h, 1/2]`.
fn dyadic_from_8h(h: f64) -> Vec<f64> {
    default_radii(h)
        .into_iter()
        .filter(|&r| r >= 8.0 * h * (1.0 - 1e-12) && r <= 0.5)
        .collect()
}

fn density(scale: Scale, tol: &Tolerances) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    // half-space preset minimizer in the plane
    let m = scale.pick(12, 16);
    let p = Params::new(2, 0.75, 0.5)?;
    let g = CellGrid::new(2, 2.0, m)?;
    let (problem, init) = preset_problem(&p, Preset::HalfSpace, &g, Ball::centered(1.0), 1.0)?;
    let state = minimize_pair(&problem, init, &Schedule::default())?;
    checks.extend(
        descent_checks(&problem, &state, tol.positivity)?
            .into_iter()
            .map(|c| Check {
                name: format!("half-space-{}", c.name),
                ..c
            }),
    );
    let x0 = default_anchor(&problem, &state.e)?;
    let h = g.h();
    let prof = density_profile(&state.e, x0, &default_radii(h))?;
    let half = half_space_ratio(2);
    let used: Vec<_> = prof.rows.iter().filter(|r| !r.excluded).collect();
    let worst = max_of(used.iter().map(|r| (r.ratio - half).abs() * r.r / h));
    checks.push(
        Check::at_most("half-space-ratio", worst, tol.density_constant)
            .with_detail(format!("{} radii, max |ratio − π/2| r/h", used.len())),
    );
    checks.push(Check::at_least("half-space-radii", used.len() as f64, 1.0));
    // nontrivial preset under refinement
    let (coarse, fine) = scale.pick((64, 128), (128, 256));
    let mut mins = Vec::new();
    for m in [coarse, fine] {
        let (_, problem, state) = lobe_minimizer(m)?;
        let x0 = default_anchor(&problem, &state.e)?;
        let radii = dyadic_from_8h(state.u.grid.h());
        let prof = density_profile(&state.e, x0, &radii)?;
        mins.push(prof.min_ratio);
    }
    let (lo, hi) = (mins[0].min(mins[1]), mins[0].max(mins[1]));
    checks.push(Check::at_least("lobe-min-ratio", mins[1], tol.density_floor).empirical());
    checks.push(
        Check::at_most("lobe-refinement-factor", hi / lo, 2.0)
            .empirical()
            .with_detail(format!("min ratios {mins:?}")),
    );
    Ok(checks)
}

fn growth(scale: Scale, tol: &Tolerances) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut worst = 0.0f64;
    for (n, m) in [(1, scale.pick(128, 256)), (2, scale.pick(16, 32))] {
        let p = Params::new(n, 0.75, 0.5)?;
        let g = CellGrid::new(n, 2.0, m)?;
        let (_, u) = synthetic_power_field(&p, &g)?;
        let fit = growth_fit(&p, &u, [0.0, 0.0], &[0.125, 0.25, 0.5, 1.0])?;
        worst = worst.max((fit.slope - p.growth_exponent()).abs());
    }
    checks.push(Check::at_most(
        "synthetic-slope",
        worst,
        tol.synthetic_slope,
    ));
    let (p, problem, state) = lobe_minimizer(scale.pick(128, 256))?;
    let x0 = default_anchor(&problem, &state.e)?;
    let fit = growth_fit(&p, &state.u, x0, &default_radii(state.u.grid.h()))?;
    checks.push(
        Check::at_most(
            "minimizer-slope",
            (fit.slope - 0.5).abs(),
            tol.minimizer_slope,
        )
        .empirical()
        .with_detail(format!("slope {}", fit.slope)),
    );
    checks.push(
        Check::at_most("rescaled-sup-spread", fit.rescaled_spread, 2.0)
            .empirical()
            .with_detail("largest over smallest rescaled sup".to_string()),
    );
    Ok(checks)
}

fn extension_bound<R: Rng>(scale: Scale, _tol: &Tolerances, rng: &mut R) -> Result<Vec<Check>> {
    let m = scale.pick(16, 32);
    let data = [
        (1, Preset::HalfSpace, rng.gen_range(0.5..2.0)),
        (1, Preset::Ring, rng.gen_range(0.5..3.0)),
        (1, Preset::Empty, 0.0),
        (1, Preset::Lobe, rng.gen_range(3.0..6.0)),
        (2, Preset::HalfSpace, rng.gen_range(0.5..2.0)),
    ];
    let mut checks = Vec::new();
    let (mut held, mut finite, mut constant) = (0usize, 0usize, 0.0f64);
    for &(n, preset, amp) in &data {
        let p = Params::new(n, 0.75, 0.5)?;
        let g = CellGrid::new(n, 2.0, if n == 1 { m } else { scale.pick(6, 8) })?;
        let (problem, init) = preset_problem(&p, preset, &g, Ball::centered(1.0), amp)?;
        let state = minimize_pair(&problem, init, &Schedule::default())?;
        let (check, sup, measured) = extension_bound_row(&p, &state)?;
        held += usize::from(check.passed);
        finite += usize::from(sup.is_finite());
        constant = constant.max(measured);
    }
    checks.push(Check::at_least(
        "finite-sup",
        finite as f64,
        data.len() as f64,
    ));
    checks.push(
        Check::at_least("bound-holds", held as f64, data.len() as f64)
            .with_detail(format!("largest measured constant {constant}")),
    );
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_oracle() {
        // quadrature-free check of the closed form by a fine midpoint rule
        let sigma = 0.5;
        let k = 2000;
        let h = 1.0 / k as f64;
        let mut sum = 0.0;
        for i in 0..k {
            for j in 0..k {
                let x = (i as f64 + 0.5) * h;
                let y = 2.0 + (j as f64 + 0.5) * h;
                sum += (y - x).powf(-1.0 - sigma) * h * h;
            }
        }
        assert!((sum - unit_gap_interaction(sigma)).abs() < 1e-6);
        assert!((unit_gap_interaction(sigma) - 0.38551).abs() < 1e-5);
    }

    #[test]
    fn dyadic_radii() {
        assert_eq!(default_radii(1.0 / 32.0), vec![0.125, 0.25, 0.5]);
        assert_eq!(default_radii(0.125), vec![0.5, 0.75, 1.0]);
        assert_eq!(dyadic_from_8h(1.0 / 64.0), vec![0.125, 0.25, 0.5]);
    }

    #[test]
    fn criteria_ids_are_complete() {
        let ids: Vec<usize> = CRITERIA.iter().map(|c| c.0).collect();
        assert_eq!(ids, (1..=13).collect::<Vec<_>>());
    }

    #[test]
    fn quick_kernel_and_perimeter_pass() {
        let tol = Tolerances::default();
        for id in [1, 2] {
            let r = run_criterion(id, Scale::Quick, &tol, 1);
            assert!(r.passed(), "{:?}", r.checks);
        }
    }
}
