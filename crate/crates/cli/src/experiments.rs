//! The experiments behind the subcommands.

use nlfb_core::extension::gagliardo_to_extension_ratio;
use nlfb_core::minimizer::{
    comparison_check, default_anchor, density_profile, extension_bound_check, growth_fit,
    half_space_ratio, preset_problem, Anneal,
};
use nlfb_core::rearrangement::{nonexpansive_check, rearrangement_energy_check};
use nlfb_core::replacement::{
    check_bounds, energy_increment, harmonicity_residual, orthogonality_residual, radial_increment,
    solve_from, subharmonicity_check, unit_cylinder_grid,
};
use nlfb_core::{
    check_admissible, extend_poisson, free_boundary_distance, minimize_pair, per_sigma,
    seminorm_consistency, solve_replacement, steiner_slicewise, total_functional, CellGrid,
    Cylinder, ExtendedField, Exterior, ExteriorDatum, HalfCylinderGrid, NodeField, PairProblem,
    PairState, Params, Preset, ReplacementProblem, Result, Schedule, SetMask,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{Config, Experiment};
use crate::output::{Check, Outcome, Plot, Table, Value};

pub fn run(experiment: Experiment, config: &Config) -> Result<Outcome> {
    match experiment {
        Experiment::Energy => energy(config),
        Experiment::Extend => extend(config),
        Experiment::Replace => replace(config),
        Experiment::Rearrange => rearrange(config),
        Experiment::Minimize => minimize(config),
        Experiment::Density => density(config),
        Experiment::Growth => growth(config),
        Experiment::Verify => Err(nlfb_core::Error::InvalidInput(
            "verify has its own runner".into(),
        )),
    }
}

fn rng(config: &Config) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(config.seed)
}

fn norm(n: usize, x: &[f64; 2]) -> f64 {
    if n == 1 {
        x[0].abs()
    } else {
        x[0].hypot(x[1])
    }
}

/// Base nodes on the first axis, in increasing `x₁`.
fn axis_nodes(grid: &CellGrid) -> Vec<usize> {
    (0..grid.num_nodes())
        .filter(|&i| grid.dim() == 1 || grid.node_coord(i)[1].abs() < 1e-12 * grid.half_width())
        .collect()
}

fn axis_cells(grid: &CellGrid) -> Vec<usize> {
    let h = grid.h();
    (0..grid.num_cells())
        .filter(|&c| grid.dim() == 1 || (grid.cell_center(c)[1] - 0.5 * h).abs() < 1e-9 * h)
        .collect()
}

/// Dyadic radii `2^{−j} ∈ [4h, 1/2]`, or `{4h, 6h, 8h}` when there are fewer
/// than three of them.
pub fn default_radii(h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = 0.5;
    while r >= 4.0 * h * (1.0 - 1e-12) {
        out.push(r);
        r *= 0.5;
    }
    out.reverse();
    if out.len() < 3 {
        out = vec![4.0 * h, 6.0 * h, 8.0 * h];
    }
    out
}

fn radii(config: &Config, h: f64) -> Vec<f64> {
    if config.density.radii.is_empty() {
        default_radii(h)
    } else {
        config.density.radii.clone()
    }
}

fn schedule(config: &Config) -> Schedule {
    let m = &config.minimize;
    Schedule {
        max_sweeps: m.max_sweeps,
        anneal: (m.anneal_steps > 0).then_some(Anneal {
            temperature: m.anneal_temperature,
            cooling: m.anneal_cooling,
            steps: m.anneal_steps,
            seed: config.seed,
        }),
    }
}

fn preset_state(config: &Config) -> Result<(Params, PairProblem, PairState)> {
    let params = config.core_params()?;
    let base = config.base_grid()?;
    let (problem, init) = preset_problem(
        &params,
        config.preset,
        &base,
        config.omega(),
        config.minimize.amplitude,
    )?;
    Ok((params, problem, init))
}

fn minimized(config: &Config) -> Result<(Params, PairProblem, PairState)> {
    let (params, problem, init) = preset_state(config)?;
    let out = minimize_pair(&problem, init, &schedule(config))?;
    Ok((params, problem, out))
}

fn report_measurements(out: &mut Outcome, r: &nlfb_core::EnergyReport) {
    out.energy = Some(*r);
    out.measure("total", r.total);
    out.measure("dirichlet", r.dirichlet);
    out.measure("per_sigma", r.per_sigma);
}

fn profile_plot(name: &str, title: &str, u: &NodeField, e: &SetMask) -> Plot {
    let g = &u.grid;
    let trace: Vec<(f64, f64)> = axis_nodes(g)
        .into_iter()
        .map(|i| (g.node_coord(i)[0], u.values[i]))
        .collect();
    let set: Vec<(f64, f64)> = axis_cells(g)
        .into_iter()
        .map(|c| (g.cell_center(c)[0], if e.inside[c] { 1.0 } else { 0.0 }))
        .collect();
    Plot::new(name, title, "x1", "value")
        .line("u", trace)
        .line("indicator of E", set)
}

fn state_tables(state: &PairState, problem: &PairProblem) -> Vec<Table> {
    let g = &state.u.grid;
    let mut nodes = Table::new("state", &["x", "y", "u"]);
    for i in 0..g.num_nodes() {
        let x = g.node_coord(i);
        nodes.push(vec![x[0].into(), x[1].into(), state.u.values[i].into()]);
    }
    let mut cells = Table::new("set", &["x", "y", "in_e", "in_omega"]);
    for c in 0..g.num_cells() {
        let x = g.cell_center(c);
        cells.push(vec![
            x[0].into(),
            x[1].into(),
            state.e.inside[c].into(),
            problem.omega_cells()[c].into(),
        ]);
    }
    let mut history = Table::new("history", &["step", "total"]);
    for (k, v) in state.history.iter().enumerate() {
        history.push(vec![k.into(), (*v).into()]);
    }
    vec![nodes, cells, history]
}

/// Descent, stability, positivity and admissibility of a minimizer output.
pub fn descent_checks(
    problem: &PairProblem,
    state: &PairState,
    positivity: f64,
) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let stalls = state
        .history
        .windows(2)
        .filter(|w| w[1] >= w[0] - nlfb_core::minimizer::ACCEPT_TOL)
        .count();
    checks.push(
        Check::at_most("history-strictly-decreasing", stalls as f64, 0.0).with_detail(format!(
            "{} accepted moves",
            state.history.len().saturating_sub(1)
        )),
    );
    let (_, report) = problem.evaluate(&state.e)?;
    checks.push(Check::at_most(
        "final-energy-reevaluated",
        (report.total - state.report.total).abs(),
        0.0,
    ));
    let again = minimize_pair(
        problem,
        state.clone(),
        &Schedule {
            max_sweeps: 1,
            anneal: None,
        },
    )?;
    checks.push(Check::at_most(
        "single-flip-stable",
        (again.history.len() - 1) as f64,
        0.0,
    ));
    checks.push(Check::at_least(
        "one-phase-positivity",
        state.u.min_value(),
        -positivity,
    ));
    checks.push(match check_admissible(&state.u, &state.e) {
        Ok(()) => Check::flag("admissible", true),
        Err(e) => Check::flag("admissible", false).with_detail(e.to_string()),
    });
    Ok(checks)
}

fn energy(config: &Config) -> Result<Outcome> {
    let (params, _, state) = preset_state(config)?;
    let omega = config.omega();
    let tol = &config.tolerances;
    let r = state.report;
    let mut out = Outcome::default();
    report_measurements(&mut out, &r);
    let direct = total_functional(&params, &state.u, &state.e, &omega)?;
    out.checks.push(Check::at_most(
        "functional-reevaluation",
        (direct.total - r.total).abs() / r.total.abs().max(1.0),
        tol.symmetry,
    ));
    let sum = r.l_in_out + r.l_in_far + r.l_far_out;
    out.checks.push(Check::at_most(
        "perimeter-decomposition",
        (sum - r.per_sigma).abs() / r.per_sigma.abs().max(1e-300),
        tol.decomposition,
    ));
    let comp = per_sigma(params.sigma, &state.e.complement(), &omega)?.total();
    out.checks.push(Check::at_most(
        "perimeter-complement-symmetry",
        (comp - r.per_sigma).abs() / r.per_sigma.abs().max(1e-300),
        tol.symmetry,
    ));
    let least = [r.l_in_out, r.l_in_far, r.l_far_out, r.dirichlet]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    out.checks
        .push(Check::at_least("terms-nonnegative", least, 0.0));
    out.checks.push(match check_admissible(&state.u, &state.e) {
        Ok(()) => Check::flag("admissible", true),
        Err(e) => Check::flag("admissible", false).with_detail(e.to_string()),
    });
    let mut t = Table::new("energy", &["term", "value"]);
    for (k, v) in [
        ("l_in_out", r.l_in_out),
        ("l_in_far", r.l_in_far),
        ("l_far_out", r.l_far_out),
        ("per_sigma", r.per_sigma),
        ("dirichlet", r.dirichlet),
        ("total", r.total),
        ("truncation_error", r.truncation_error),
    ] {
        t.push(vec![k.into(), v.into()]);
    }
    out.tables.push(t);
    out.plots
        .push(profile_plot("energy", "initial pair", &state.u, &state.e));
    Ok(out)
}

fn extend(config: &Config) -> Result<Outcome> {
    let (params, _, state) = preset_state(config)?;
    let base = state.u.grid.clone();
    let n = base.dim();
    let tol = &config.tolerances;
    let grid = HalfCylinderGrid::new(&params, &base, config.grid.z_top)?;
    let u = &state.u;
    let ext = extend_poisson(&params, u, &grid)?;
    let one_field = NodeField::constant(&base, 1.0);
    let one = extend_poisson(&params, &one_field, &grid)?;
    let mut out = Outcome::default();
    let one_err = one
        .values
        .iter()
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);
    out.checks.push(Check::at_most(
        "extension-of-one",
        one_err,
        tol.extension_one,
    ));
    let combo = extend_poisson(&params, &u.combine(2.0, &one_field, 3.0)?, &grid)?;
    let lin = ext.combine(2.0, &one, 3.0)?;
    let scale = lin.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let lin_err = combo
        .values
        .iter()
        .zip(&lin.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    out.checks.push(Check::at_most(
        "extension-linearity",
        lin_err / scale,
        tol.linearity,
    ));
    let (dlo, dhi) = u.datum.range(n, base.half_width());
    let (lo, hi) = (u.min_value().min(dlo), u.max_value().max(dhi));
    let violation = (lo - ext.min_value()).max(ext.max_value() - hi).max(0.0);
    out.checks.push(Check::at_most(
        "extension-maximum-principle",
        violation,
        tol.bounds,
    ));
    let bound = extension_bound_check(&params, u)?;
    out.checks.push(
        Check::flag("extension-sup-bound", bound.bound.holds()).with_detail(format!(
            "sup {} vs kernel constant {}",
            bound.bound.sup_extension, bound.bound.kernel_constant
        )),
    );
    out.measure("sup_extension_5_9", bound.bound.sup_extension);
    out.measure("sup_trace_half", bound.sup_trace_half);
    out.measure("tail_integral", bound.bound.tail);
    out.measure("measured_constant", bound.bound.measured_constant);
    out.measure("kernel_constant", bound.bound.kernel_constant);
    out.measure(
        "gagliardo_to_extension_ratio",
        gagliardo_to_extension_ratio(n, params.s),
    );
    // consistency against the trace with its values strictly inside Ω removed
    let omega_cells = base.cells_in_ball(&config.omega());
    let mut v_ref = u.clone();
    for i in 0..base.num_nodes() {
        if base.node_cells(i).iter().all(|&c| omega_cells[c]) {
            v_ref.values[i] = 0.0;
        }
    }
    match seminorm_consistency(&params, u, &v_ref, &config.omega(), &grid) {
        Ok(c) => out.measure("seminorm_consistency_ratio", c.ratio),
        Err(e) => {
            out.extra
                .insert("seminorm_consistency".into(), json!(e.to_string()));
        }
    }

    let mut t = Table::new("extend", &["x", "z", "value"]);
    let line = axis_nodes(&base);
    for k in 0..grid.num_levels() {
        for &i in &line {
            let idx = grid.index(i, k);
            t.push(vec![
                base.node_coord(i)[0].into(),
                grid.z[k].into(),
                ext.values[idx].into(),
            ]);
        }
    }
    out.tables.push(t);
    let mut plot = Plot::new("extend", "extension profiles", "x1", "value");
    for frac in [0.0, 0.1, 0.25, 0.5, 1.0] {
        let target = frac * grid.z_top();
        let k = (0..grid.num_levels())
            .min_by(|&a, &b| {
                (grid.z[a] - target)
                    .abs()
                    .total_cmp(&(grid.z[b] - target).abs())
            })
            .unwrap_or(0);
        let pts = line
            .iter()
            .map(|&i| (base.node_coord(i)[0], ext.get(i, k)))
            .collect();
        plot = plot.line(&format!("z = {:.3}", grid.z[k]), pts);
    }
    out.plots.push(plot);
    Ok(out)
}

/// A smooth positive field on the unit cylinder with random coefficients.
pub fn random_phi<R: Rng>(g: &HalfCylinderGrid, rng: &mut R) -> ExtendedField {
    let (a, b, c) = (
        rng.gen_range(0.2..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(0.5..3.0),
    );
    ExtendedField::from_fn(g, move |x, z| {
        a + 0.3 * (1.0 + (c * x[0] + b).sin()) * (1.0 + z) + 0.2 * x[1] * x[1]
    })
}

fn ball_mask(base: &CellGrid, lo: f64, hi: f64) -> SetMask {
    let n = base.dim();
    SetMask::from_fn(base, Exterior::Empty, |x| {
        let r = norm(n, x);
        r >= lo && r < hi
    })
}

fn replace(config: &Config) -> Result<Outcome> {
    let params = config.core_params()?;
    let tol = &config.tolerances;
    let rc = &config.replace;
    let grid = unit_cylinder_grid(&params, config.grid.cells_per_half)?;
    let base = grid.base.clone();
    let region = Cylinder::scaled(1.0, config.grid.cylinder_fraction);
    let mut rng = rng(config);
    let k = ball_mask(&base, 0.0, rc.constraint_radius);
    let p = ReplacementProblem::new(random_phi(&grid, &mut rng), k.clone(), rc.gamma, region)?;
    let sol = solve_replacement(&p)?;
    let mut out = Outcome::default();
    out.measure("energy", sol.energy);
    out.measure("iterations", sol.iterations as f64);
    let o = orthogonality_residual(&sol.field, &p, rc.trials, &mut rng);
    out.checks
        .push(Check::at_most("orthogonality", o.residual, tol.residual));
    out.checks
        .push(Check::at_most("pythagoras", o.pythagoras, tol.residual));
    out.checks.push(Check::at_most(
        "harmonicity",
        harmonicity_residual(&sol.field, &p),
        tol.residual,
    ));
    out.checks.push(match check_bounds(&sol.field, &p) {
        Ok((lo, hi)) => {
            Check::flag("maximum-principle", true).with_detail(format!("range [{lo}, {hi}]"))
        }
        Err(e) => Check::flag("maximum-principle", false).with_detail(e.to_string()),
    });
    if rc.gamma == 0.0 {
        let sub = subharmonicity_check(&sol.field, &p, rc.trials, &mut rng);
        out.checks
            .push(Check::at_most("subharmonicity", sub, tol.residual));
    }
    let start: Vec<f64> = (0..grid.num_nodes())
        .map(|_| rng.gen_range(-5.0..5.0))
        .collect();
    let other = solve_from(&p, &start)?;
    let scale = sol.field.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let diff = sol
        .field
        .values
        .iter()
        .zip(&other.field.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    out.checks
        .push(Check::at_most("uniqueness", diff / scale, tol.uniqueness));

    // increments for φ ≡ 1 as the constraint grows by an annulus
    let unit = ReplacementProblem::new(ExtendedField::constant(&grid, 1.0), k, 0.0, region)?;
    let mut t = Table::new(
        "increments",
        &["kind", "width", "measure", "increment", "ratio"],
    );
    let mut ratios = Vec::new();
    let mut least = f64::INFINITY;
    for w in [0.05, 0.1, 0.2] {
        let hi = rc.constraint_radius + w;
        if hi >= config.grid.cylinder_fraction {
            continue;
        }
        let a = ball_mask(&base, rc.constraint_radius, hi);
        if a.count() == 0 {
            continue;
        }
        let inc = energy_increment(&unit, &a)?;
        least = least.min(inc);
        ratios.push(inc / a.measure());
        t.push(vec![
            "annulus".into(),
            w.into(),
            a.measure().into(),
            inc.into(),
            (inc / a.measure()).into(),
        ]);
    }
    for r in [0.45, 0.4, 0.3] {
        let inc = radial_increment(&grid, 0.5, r, 1.0)?;
        least = least.min(inc.increment);
        t.push(vec![
            "radial".into(),
            (0.5 - r).into(),
            inc.measure.into(),
            inc.increment.into(),
            inc.ratio().into(),
        ]);
    }
    out.checks.push(Check::at_least(
        "increments-nonnegative",
        least,
        -tol.increment,
    ));
    if ratios.len() >= 2 {
        let (lo, hi) = ratios
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        out.checks.push(Check::at_most(
            "increment-ratio-spread",
            hi / lo,
            tol.increment_spread,
        ));
    }
    let plot_inc = Plot::new(
        "increments",
        "increment per unit measure",
        "measure of A",
        "increment / |A|",
    )
    .line(
        "annulus",
        t.rows
            .iter()
            .filter(|r| r[0] == Value::Text("annulus".into()))
            .map(|r| match (&r[2], &r[4]) {
                (Value::Num(m), Value::Num(q)) => (*m, *q),
                _ => (f64::NAN, f64::NAN),
            })
            .collect(),
    );
    out.tables.push(t);
    let line = axis_nodes(&base);
    let mut levels = Table::new("replacement", &["x", "z", "phi", "replacement"]);
    let mut plot = Plot::new("replacement", "replacement profiles", "x1", "value");
    for k in 0..grid.num_levels() {
        for &i in &line {
            let idx = grid.index(i, k);
            levels.push(vec![
                base.node_coord(i)[0].into(),
                grid.z[k].into(),
                p.phi.values[idx].into(),
                sol.field.values[idx].into(),
            ]);
        }
    }
    for k in [0, grid.num_levels() / 4, grid.num_levels() / 2] {
        let pts = line
            .iter()
            .map(|&i| (base.node_coord(i)[0], sol.field.get(i, k)))
            .collect();
        plot = plot.line(&format!("z = {:.3}", grid.z[k]), pts);
    }
    out.tables.push(levels);
    out.plots.push(plot);
    out.plots.push(plot_inc);
    Ok(out)
}

/// Nonnegative random field on the unit cylinder vanishing on the lateral boundary.
pub fn random_nonnegative<R: Rng>(g: &HalfCylinderGrid, rng: &mut R) -> ExtendedField {
    let w = g.base.half_width();
    let n = g.base.dim();
    let vals = (0..g.num_nodes())
        .map(|i| {
            let (x, _) = g.coord(i);
            if x[0].abs() >= w || (n == 2 && x[1].abs() >= w) {
                0.0
            } else {
                rng.gen_range(0.0..1.0f64).powi(2)
            }
        })
        .collect();
    ExtendedField::new(g.clone(), vals).expect("field matches its grid")
}

/// Whether every level of `r` is a permutation of the same level of `v`.
pub fn equimeasurable(v: &ExtendedField, r: &ExtendedField) -> bool {
    let nb = v.grid.num_base_nodes();
    v.values.chunks(nb).zip(r.values.chunks(nb)).all(|(a, b)| {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        a == b
    })
}

fn rearrange(config: &Config) -> Result<Outcome> {
    let params = config.core_params()?;
    let tol = &config.tolerances;
    let grid = unit_cylinder_grid(&params, config.grid.cells_per_half)?;
    let mut rng = rng(config);
    let mut out = Outcome::default();
    let mut t = Table::new(
        "rearrange",
        &[
            "field",
            "energy",
            "rearranged_energy",
            "relative_defect",
            "nonexpansive_defect",
            "equimeasurable",
        ],
    );
    let (mut worst_defect, mut worst_nonexp, mut mismatched) =
        (f64::INFINITY, f64::INFINITY, 0usize);
    let mut sample = None;
    for k in 0..config.rearrange.fields {
        let v = random_nonnegative(&grid, &mut rng);
        let w = random_nonnegative(&grid, &mut rng);
        let r = steiner_slicewise(&v)?;
        let same = equimeasurable(&v, &r);
        mismatched += usize::from(!same);
        let d = rearrangement_energy_check(&v)?;
        let rel = d.defect / d.energy.max(1e-300);
        let ne = nonexpansive_check(&v, &w)?;
        worst_defect = worst_defect.min(rel);
        worst_nonexp = worst_nonexp.min(ne);
        t.push(vec![
            k.into(),
            d.energy.into(),
            d.rearranged_energy.into(),
            rel.into(),
            ne.into(),
            same.into(),
        ]);
        if sample.is_none() {
            sample = Some((v, r));
        }
    }
    out.checks.push(Check::at_least(
        "energy-defect",
        worst_defect,
        -tol.rearrangement,
    ));
    out.checks.push(Check::at_most(
        "equimeasurability-mismatches",
        mismatched as f64,
        0.0,
    ));
    out.checks.push(Check::at_least(
        "nonexpansiveness",
        worst_nonexp,
        -tol.nonexpansive,
    ));
    out.measure("worst_relative_defect", worst_defect);
    out.measure("worst_nonexpansive_defect", worst_nonexp);
    out.tables.push(t);
    if let Some((v, r)) = sample {
        let line = axis_nodes(&grid.base);
        let pts = |f: &ExtendedField| {
            line.iter()
                .map(|&i| (grid.base.node_coord(i)[0], f.get(i, 0)))
                .collect()
        };
        out.plots.push(
            Plot::new("rearrange", "trace of the first field", "x1", "value")
                .line("v", pts(&v))
                .line("rearranged", pts(&r)),
        );
    }
    Ok(out)
}

fn minimize(config: &Config) -> Result<Outcome> {
    let (params, problem, state) = minimized(config)?;
    let tol = &config.tolerances;
    let mut out = Outcome::default();
    report_measurements(&mut out, &state.report);
    out.measure("sweeps", state.sweeps as f64);
    out.measure("accepted_moves", (state.history.len() - 1) as f64);
    out.measure("converged", if state.converged { 1.0 } else { 0.0 });
    out.checks
        .extend(descent_checks(&problem, &state, tol.positivity)?);
    let mut rng = rng(config);
    let cmp = comparison_check(&problem, &state, config.minimize.competitors, &mut rng)?;
    out.checks.push(Check::at_least(
        "replacement-comparison",
        cmp.worst_relative_defect,
        -tol.comparison,
    ));
    out.measure("comparison_state_value", cmp.state_value);
    out.extra.insert(
        "comparison_competitors".into(),
        json!(cmp.competitor_values),
    );
    out.measure("growth_exponent", params.growth_exponent());
    out.tables.extend(state_tables(&state, &problem));
    out.plots.push(
        Plot::new("history", "energy of accepted moves", "move", "total").line(
            "total",
            state
                .history
                .iter()
                .enumerate()
                .map(|(k, v)| (k as f64, *v))
                .collect(),
        ),
    );
    out.plots
        .push(profile_plot("state", "final pair", &state.u, &state.e));
    Ok(out)
}

fn density(config: &Config) -> Result<Outcome> {
    let (_, problem, state) = minimized(config)?;
    let tol = &config.tolerances;
    let g = state.u.grid.clone();
    let n = g.dim();
    let h = g.h();
    let x0 = default_anchor(&problem, &state.e)?;
    let prof = density_profile(&state.e, x0, &radii(config, h))?;
    let half = half_space_ratio(n);
    let mut out = Outcome::default();
    report_measurements(&mut out, &state.report);
    out.measure("anchor_x", x0[0]);
    out.measure("anchor_y", x0[1]);
    out.measure("min_ratio", prof.min_ratio);
    out.measure("half_space_ratio", half);
    let used: Vec<_> = prof.rows.iter().filter(|r| !r.excluded).collect();
    if used.is_empty() {
        out.checks
            .push(Check::failed("density-rows", "every radius is excluded"));
    } else if config.preset == Preset::HalfSpace {
        let worst = used
            .iter()
            .map(|r| (r.ratio - half).abs() * r.r / h)
            .fold(0.0, f64::max);
        out.checks.push(
            Check::at_most("half-space-density", worst, tol.density_constant)
                .with_detail("max |ratio − |B_1|/2| r / h".to_string()),
        );
    } else {
        out.checks
            .push(Check::at_least("density-floor", prof.min_ratio, tol.density_floor).empirical());
    }
    let mut t = Table::new(
        "density",
        &[
            "r",
            "inside",
            "outside",
            "ratio",
            "excluded",
            "degenerate",
            "half_space_ratio",
        ],
    );
    for r in &prof.rows {
        t.push(vec![
            r.r.into(),
            r.inside.into(),
            r.outside.into(),
            r.ratio.into(),
            r.excluded.into(),
            r.degenerate.into(),
            half.into(),
        ]);
    }
    out.tables.push(t);
    out.plots.push(
        Plot::new("density", "density ratio at the anchor", "r", "ratio")
            .line(
                "min(|B∩E|, |B∖E|) / r^n",
                used.iter().map(|r| (r.r, r.ratio)).collect(),
            )
            .line("half space", used.iter().map(|r| (r.r, half)).collect()),
    );
    Ok(out)
}

/// `d(x)^{s−σ/2}` on `{x₁ < 0}` with `d` the distance to the free boundary.
pub fn synthetic_power_field(params: &Params, grid: &CellGrid) -> Result<(SetMask, NodeField)> {
    let e = SetMask::half_space(grid, 0, 0.0, false);
    let expo = params.growth_exponent();
    let mut values = vec![0.0; grid.num_nodes()];
    for (i, v) in values.iter_mut().enumerate() {
        let x = grid.node_coord(i);
        if x[0] < 0.0 {
            *v = free_boundary_distance(&e, x)?.powf(expo);
        }
    }
    Ok((
        e,
        NodeField::new(grid.clone(), values, ExteriorDatum::zero())?,
    ))
}

fn growth(config: &Config) -> Result<Outcome> {
    let (params, problem, state) = minimized(config)?;
    let tol = &config.tolerances;
    let g = state.u.grid.clone();
    let x0 = default_anchor(&problem, &state.e)?;
    let radii = radii(config, g.h());
    let expo = params.growth_exponent();
    let mut out = Outcome::default();
    report_measurements(&mut out, &state.report);
    out.measure("growth_exponent", expo);
    let (_, syn) = synthetic_power_field(&params, &g)?;
    let syn_fit = growth_fit(&params, &syn, [0.0, 0.0], &radii)?;
    out.checks.push(Check::at_most(
        "synthetic-slope",
        (syn_fit.slope - expo).abs(),
        tol.synthetic_slope,
    ));
    out.measure("synthetic_slope", syn_fit.slope);
    let mut t = Table::new("growth", &["source", "r", "sup", "rescaled_sup"]);
    for (&(r, s), &q) in syn_fit.points.iter().zip(&syn_fit.rescaled_sups) {
        t.push(vec!["synthetic".into(), r.into(), s.into(), q.into()]);
    }
    let mut plot = Plot::new("growth", "sup of u on balls at the anchor", "r", "sup u").log_log();
    plot = plot.line("synthetic", syn_fit.points.clone());
    match growth_fit(&params, &state.u, x0, &radii) {
        Ok(fit) => {
            out.checks.push(
                Check::at_most(
                    "minimizer-slope",
                    (fit.slope - expo).abs(),
                    tol.minimizer_slope,
                )
                .empirical()
                .with_detail(format!("slope {} against s − σ/2 = {expo}", fit.slope)),
            );
            out.measure("slope", fit.slope);
            out.measure("intercept", fit.intercept);
            out.measure("rescaled_spread", fit.rescaled_spread);
            for (&(r, s), &q) in fit.points.iter().zip(&fit.rescaled_sups) {
                t.push(vec!["minimizer".into(), r.into(), s.into(), q.into()]);
            }
            if let Some(&(r1, s1)) = fit.points.last() {
                let reference = fit
                    .points
                    .iter()
                    .map(|&(r, _)| (r, s1 * (r / r1).powf(expo)))
                    .collect();
                plot = plot.line("r^(s−σ/2)", reference);
            }
            plot = plot.line("minimizer", fit.points);
        }
        Err(e) => out
            .checks
            .push(Check::failed("minimizer-slope", e.to_string()).empirical()),
    }
    out.measure("anchor_x", x0[0]);
    out.measure("anchor_y", x0[1]);
    out.tables.push(t);
    out.plots.push(plot);
    Ok(out)
}

/// The extension bound for the state, as a check.
pub fn extension_bound_row(params: &Params, state: &PairState) -> Result<(Check, f64, f64)> {
    let b = extension_bound_check(params, &state.u)?;
    let ok = b.bound.holds() && b.bound.sup_extension.is_finite();
    let check = Check::flag("extension-bound", ok).with_detail(format!(
        "sup {} ≤ {} × ({} + {})",
        b.bound.sup_extension, b.bound.kernel_constant, b.bound.sup_trace, b.bound.tail
    ));
    Ok((check, b.bound.sup_extension, b.bound.measured_constant))
}
