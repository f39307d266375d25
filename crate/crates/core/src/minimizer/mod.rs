//! Discrete minimization of `F_Ω(u, E)` over one-phase pairs with fixed
//! exterior data, and the measurements taken on the minimizers.
//!
//! For a given set the field is the exact minimizer of the Gagliardo form with
//! `u = 0` on the cells off `E` and `u = g` on the nodes touching cells off
//! `Ω`. The set is improved by single-cell flips along its boundary, each
//! accepted only when the exactly re-evaluated functional decreases.

mod measure;
mod presets;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{
    check_admissible, check_omega, perimeter_terms, DirichletForm, EnergyReport, PerimeterTable,
};
use crate::error::{Error, Result};
use crate::extension::form::INNER_RTOL;
use crate::field::NodeField;
use crate::geometry::{Ball, Point, SetMask};
use crate::params::Params;
use crate::solver::pcg;

pub use measure::{
    comparison_check, default_anchor, density_profile, extension_bound_check, growth_fit,
    half_space_ratio, Comparison, DensityProfile, DensityRow, ExtensionBound, GrowthFit,
};
pub use presets::{preset_problem, Preset};

/// Smallest decrease of the functional for a flip to be accepted.
pub const ACCEPT_TOL: f64 = 1e-12;

/// Negative values above this are rounding and get clamped to zero.
pub const CLAMP_TOL: f64 = 1e-9;

/// The functional on a fixed grid, ball `Ω` and exterior data.
pub struct PairProblem {
    pub params: Params,
    pub omega: Ball,
    /// Values of `u` on the nodes touching cells off `Ω` and the datum beyond
    /// the box; values on the other nodes are ignored.
    pub g: NodeField,
    /// `E ∖ Ω`: its cells off `Ω` and its exterior.
    pub outside: SetMask,
    form: DirichletForm,
    quad: Vec<f64>,
    lin: Vec<f64>,
    table: PerimeterTable,
    omega_cells: Vec<bool>,
    /// Nodes all of whose cells lie in `Ω`.
    omega_nodes: Vec<bool>,
}

impl PairProblem {
    pub fn new(params: Params, omega: Ball, g: NodeField, outside: SetMask) -> Result<Self> {
        params.validate()?;
        let grid = g.grid.clone();
        if outside.grid != grid {
            return Err(Error::InvalidInput(
                "exterior set and datum live on different grids".into(),
            ));
        }
        g.check_finite()?;
        let omega_cells = check_omega(&grid, &omega)?;
        let omega_nodes: Vec<bool> = (0..grid.num_nodes())
            .map(|i| {
                grid.node_cells(i).iter().all(|&c| omega_cells[c])
                    && grid.node_cells(i).len() == 1 << grid.dim()
            })
            .collect();
        // g must vanish next to cells off E and be nonnegative
        let mut probe = g.clone();
        let mut mask = outside.clone();
        for c in (0..grid.num_cells()).filter(|&c| omega_cells[c]) {
            mask.inside[c] = true;
        }
        for i in (0..grid.num_nodes()).filter(|&i| omega_nodes[i]) {
            probe.values[i] = 0.0;
        }
        check_admissible(&probe, &mask)?;
        let form = DirichletForm::assemble(&params, &grid, &omega, &g.datum)?;
        let (quad, lin) = form.quadratic_parts();
        let table = PerimeterTable::new(&grid, params.sigma);
        Ok(PairProblem {
            params,
            omega,
            g,
            outside,
            form,
            quad,
            lin,
            table,
            omega_cells,
            omega_nodes,
        })
    }

    pub fn omega_cells(&self) -> &[bool] {
        &self.omega_cells
    }

    /// Number of cells of `Ω`, the cells a competitor may change.
    pub fn num_flippable(&self) -> usize {
        self.omega_cells.iter().filter(|&&b| b).count()
    }

    /// The set with the given cells of `Ω` and the prescribed part outside.
    pub fn set_with(&self, inside_omega: impl Fn(usize) -> bool) -> SetMask {
        let mut e = self.outside.clone();
        for c in 0..e.grid.num_cells() {
            if self.omega_cells[c] {
                e.inside[c] = inside_omega(c);
            }
        }
        e
    }

    fn check_set(&self, e: &SetMask) -> Result<()> {
        if e.grid != self.g.grid || e.exterior != self.outside.exterior {
            return Err(Error::InvalidInput(
                "set does not match the exterior of the problem".into(),
            ));
        }
        if let Some(c) = (0..e.grid.num_cells())
            .find(|&c| !self.omega_cells[c] && e.inside[c] != self.outside.inside[c])
        {
            return Err(Error::InvalidInput(format!(
                "set differs from the prescribed exterior at cell {c}"
            )));
        }
        Ok(())
    }

    /// The minimizer of the Gagliardo form over fields vanishing off `e`.
    pub fn solve_u_given_e(&self, e: &SetMask) -> Result<NodeField> {
        self.check_set(e)?;
        let grid = &self.g.grid;
        let total = grid.num_nodes();
        let free: Vec<usize> = (0..total)
            .filter(|&i| self.omega_nodes[i] && grid.node_cells(i).iter().all(|&c| e.inside[c]))
            .collect();
        let mut values: Vec<f64> = (0..total)
            .map(|i| {
                if self.omega_nodes[i] {
                    0.0
                } else {
                    self.g.values[i]
                }
            })
            .collect();
        if !free.is_empty() {
            let mut is_free = vec![false; total];
            for &i in &free {
                is_free[i] = true;
            }
            let a = &self.quad;
            let rhs: Vec<f64> = free
                .iter()
                .map(|&i| {
                    let row = &a[i * total..(i + 1) * total];
                    let fixed: f64 = (0..total)
                        .filter(|&j| !is_free[j])
                        .map(|j| row[j] * values[j])
                        .sum();
                    -self.lin[i] - fixed
                })
                .collect();
            let diag: Vec<f64> = free.iter().map(|&i| a[i * total + i]).collect();
            let apply = |x: &[f64], y: &mut [f64]| {
                y.par_iter_mut().zip(free.par_iter()).for_each(|(yp, &i)| {
                    let row = &a[i * total..(i + 1) * total];
                    *yp = free.iter().zip(x).map(|(&j, xj)| row[j] * xj).sum();
                });
            };
            let mut x = vec![0.0; free.len()];
            pcg(
                apply,
                &diag,
                &rhs,
                &mut x,
                INNER_RTOL,
                20 * free.len() + 1000,
            )?;
            for (p, &i) in free.iter().enumerate() {
                values[i] = if x[p] < 0.0 && x[p] >= -CLAMP_TOL {
                    0.0
                } else {
                    x[p]
                };
            }
        }
        NodeField::new(grid.clone(), values, self.g.datum)
    }

    /// The field solving for `e` and the decomposed functional.
    pub fn evaluate(&self, e: &SetMask) -> Result<(NodeField, EnergyReport)> {
        let u = self.solve_u_given_e(e)?;
        check_admissible(&u, e)?;
        let terms = perimeter_terms(&self.table, e, &self.omega_cells);
        let report = EnergyReport::new(
            terms,
            self.form.energy(&u.values),
            self.form.truncation_error(&u.values),
        );
        Ok((u, report))
    }

    /// Pair state for a set, with `u` solved.
    pub fn state(&self, e: SetMask) -> Result<PairState> {
        let (u, report) = self.evaluate(&e)?;
        Ok(PairState {
            u,
            e,
            history: vec![report.total],
            report,
            sweeps: 0,
            converged: false,
        })
    }

    /// Cells of `Ω` with a face neighbour on the other side of `∂E`.
    pub fn flippable(&self, e: &SetMask) -> Vec<usize> {
        let grid = &e.grid;
        (0..grid.num_cells())
            .filter(|&c| {
                self.omega_cells[c]
                    && grid
                        .cell_faces(c)
                        .iter()
                        .any(|&(_, _, nb)| nb.map_or(false, |o| e.inside[o] != e.inside[c]))
            })
            .collect()
    }
}

/// An admissible pair with its energy and the trace of accepted energies.
#[derive(Debug, Clone)]
pub struct PairState {
    pub u: NodeField,
    pub e: SetMask,
    pub report: EnergyReport,
    /// Total energy after every accepted greedy move, starting value first.
    pub history: Vec<f64>,
    pub sweeps: usize,
    /// Whether the last sweep accepted nothing.
    pub converged: bool,
}

/// Random flips accepted by the Metropolis rule before the greedy phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anneal {
    pub temperature: f64,
    pub cooling: f64,
    pub steps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub max_sweeps: usize,
    pub anneal: Option<Anneal>,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            max_sweeps: 200,
            anneal: None,
        }
    }
}

fn flip(e: &SetMask, c: usize) -> SetMask {
    let mut f = e.clone();
    f.inside[c] = !f.inside[c];
    f
}

/// Greedy single-flip descent, optionally after an annealing phase whose best
/// state becomes the starting point.
pub fn minimize_pair(
    problem: &PairProblem,
    init: PairState,
    schedule: &Schedule,
) -> Result<PairState> {
    check_admissible(&init.u, &init.e)?;
    problem.check_set(&init.e)?;
    let mut state = problem.state(init.e)?;
    let mut history = vec![state.report.total];

    if let Some(an) = schedule.anneal {
        let mut rng = ChaCha8Rng::seed_from_u64(an.seed);
        let mut current = state.clone();
        let mut t = an.temperature;
        for _ in 0..an.steps {
            let cand = problem.flippable(&current.e);
            if cand.is_empty() {
                break;
            }
            let c = cand[rng.gen_range(0..cand.len())];
            let e = flip(&current.e, c);
            let (u, report) = problem.evaluate(&e)?;
            let delta = report.total - current.report.total;
            if delta < 0.0 || (t > 0.0 && rng.gen::<f64>() < (-delta / t).exp()) {
                current = PairState {
                    u,
                    e,
                    report,
                    ..current
                };
                if current.report.total < state.report.total - ACCEPT_TOL {
                    state = current.clone();
                    history.push(state.report.total);
                }
            }
            t *= an.cooling;
        }
    }

    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < schedule.max_sweeps {
        sweeps += 1;
        let mut accepted = false;
        for c in problem.flippable(&state.e) {
            let e = flip(&state.e, c);
            let (u, report) = problem.evaluate(&e)?;
            if report.total < state.report.total - ACCEPT_TOL {
                state.u = u;
                state.e = e;
                state.report = report;
                history.push(report.total);
                accepted = true;
            }
        }
        if !accepted {
            converged = true;
            break;
        }
    }
    state.history = history;
    state.sweeps = sweeps;
    state.converged = converged;
    Ok(state)
}

/// Exhaustive minimum over every subset of the cells of `Ω`.
pub fn brute_force_minimum(problem: &PairProblem) -> Result<PairState> {
    let cells: Vec<usize> = (0..problem.omega_cells.len())
        .filter(|&c| problem.omega_cells[c])
        .collect();
    if cells.len() > 16 {
        return Err(Error::InvalidInput(format!(
            "{} cells are too many to enumerate",
            cells.len()
        )));
    }
    let mut best: Option<PairState> = None;
    for bits in 0u32..(1 << cells.len()) {
        let e = problem.set_with(|c| {
            let k = cells.iter().position(|&x| x == c).unwrap();
            bits >> k & 1 == 1
        });
        let state = problem.state(e)?;
        if best
            .as_ref()
            .map_or(true, |b| state.report.total < b.report.total)
        {
            best = Some(state);
        }
    }
    let mut best = best.expect("at least the empty subset is enumerated");
    best.converged = true;
    Ok(best)
}

/// Center of the face of `cell` in direction `(axis, dir)`.
pub(crate) fn face_center(e: &SetMask, cell: usize, axis: usize, dir: i32) -> Point {
    let mut p = e.grid.cell_center(cell);
    p[axis] += 0.5 * dir as f64 * e.grid.h();
    p
}

#[cfg(test)]
mod tests;
