//! Exterior data families for the experiments, on the box `[−2, 2]ⁿ` with
//! `Ω = B_1` unless another grid is given.

use serde::{Deserialize, Serialize};

use super::{PairProblem, PairState};
use crate::error::{Error, Result};
use crate::field::{ExteriorDatum, NodeField};
use crate::geometry::{norm, Ball, CellGrid, Exterior, SetMask};
use crate::params::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `E ∖ Ω = {x₁ < 0}` with a positive bump of `g` in it; starts from the
    /// half-space.
    HalfSpace,
    /// `E ∖ Ω` a ring around `Ω` carrying a positive bump; starts from `E ⊇ Ω`.
    Ring,
    /// `E ∖ Ω = ∅` and `g = 0`; starts from `E ∩ Ω = B_{1/2}`.
    Empty,
    /// `E ∖ Ω` a ball on the `−x₁` side of `Ω` carrying a positive bump;
    /// starts from `E ∩ Ω = {x₁ < −r/2}`.
    Lobe,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::HalfSpace, Preset::Ring, Preset::Empty, Preset::Lobe];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::HalfSpace => "half-space",
            Preset::Ring => "ring",
            Preset::Empty => "empty",
            Preset::Lobe => "lobe",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown preset {name:?}")))
    }
}

/// The problem of a preset with exterior bump height `amplitude`, and its
/// initial state.
pub fn preset_problem(
    params: &Params,
    preset: Preset,
    grid: &CellGrid,
    omega: Ball,
    amplitude: f64,
) -> Result<(PairProblem, PairState)> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "amplitude {amplitude} must be nonnegative"
        )));
    }
    let n = grid.dim();
    let r = omega.radius;
    let w = grid.half_width();
    if norm(n, &omega.center) != 0.0 {
        return Err(Error::InvalidInput("presets use a centered Ω".into()));
    }
    let gap = w - r;
    let bump = |t: f64| (1.0 - t * t).max(0.0);
    let (outside, g, init): (SetMask, NodeField, Box<dyn Fn(&[f64; 2]) -> bool>) = match preset {
        Preset::HalfSpace => {
            let e = SetMask::half_space(grid, 0, 0.0, false);
            let centre = [-(r + 0.5 * gap), 0.0];
            let radius = 0.45 * gap;
            let g = NodeField::from_fn(grid, ExteriorDatum::zero(), |x| {
                let d = ((x[0] - centre[0]).powi(2) + (x[1] - centre[1]).powi(2)).sqrt();
                amplitude * bump(d / radius)
            });
            (e, g, Box::new(|x: &[f64; 2]| x[0] < 0.0))
        }
        Preset::Ring => {
            let outer = r + 0.5 * gap;
            let e = SetMask::from_fn(grid, Exterior::Empty, |x| norm(n, x) < outer);
            let mid = 0.5 * (r + outer);
            let half = 0.45 * (outer - r);
            let g = NodeField::from_fn(grid, ExteriorDatum::zero(), |x| {
                amplitude * bump((norm(n, x) - mid) / half)
            });
            (e, g, Box::new(|_: &[f64; 2]| true))
        }
        Preset::Empty => {
            let e = SetMask::empty(grid);
            (
                e,
                NodeField::zeros(grid),
                Box::new(move |x: &[f64; 2]| norm(n, x) < 0.5 * r),
            )
        }
        Preset::Lobe => {
            let centre = [-(r + 0.5 * gap), 0.0];
            let dist = move |x: &[f64; 2]| {
                ((x[0] - centre[0]).powi(2) + (x[1] - centre[1]).powi(2)).sqrt()
            };
            let e = SetMask::from_fn(grid, Exterior::Empty, |x| dist(x) < 0.5 * gap);
            let radius = 0.45 * gap;
            let g = NodeField::from_fn(grid, ExteriorDatum::zero(), |x| {
                amplitude * bump(dist(x) / radius)
            });
            (e, g, Box::new(move |x: &[f64; 2]| x[0] < -0.5 * r))
        }
    };
    // admissibility: g vanishes next to every cell that is neither in E nor in Ω
    let omega_cells = grid.cells_in_ball(&omega);
    let mut g = g;
    for i in 0..grid.num_nodes() {
        if grid
            .node_cells(i)
            .iter()
            .any(|&c| !outside.inside[c] && !omega_cells[c])
        {
            g.values[i] = 0.0;
        }
    }
    let problem = PairProblem::new(*params, omega, g, outside)?;
    let e = problem.set_with(|c| init(&grid.cell_center(c)));
    let state = problem.state(e)?;
    Ok((problem, state))
}
