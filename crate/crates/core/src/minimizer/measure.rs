//! Density ratios, growth fits and extension bounds measured on pair states.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{face_center, PairProblem, PairState};
use crate::energy::perimeter_terms;
use crate::error::{Error, Result};
use crate::extension::{
    extend_min, extend_poisson, extension_sup_bound, gagliardo_to_extension_ratio, Cylinder,
    HalfCylinderGrid, SupBound, CYLINDER_FRACTION,
};
use crate::field::NodeField;
use crate::geometry::{dist, measure_in_ball, norm, Ball, Exterior, Point, SetMask};
use crate::params::{unit_ball_volume, Params};
use crate::replacement::{solve_replacement, ReplacementProblem};

/// Center of the separating face closest to the origin among the faces of
/// cells of `Ω`.
pub fn default_anchor(problem: &PairProblem, e: &SetMask) -> Result<Point> {
    let n = e.grid.dim();
    let cells = problem.omega_cells();
    e.separating_faces()
        .into_iter()
        .filter(|&(c, axis, dir)| {
            let other = e
                .grid
                .cell_faces(c)
                .into_iter()
                .find(|f| f.0 == axis && f.1 == dir)
                .and_then(|f| f.2);
            cells[c] || other.map_or(false, |o| cells[o])
        })
        .map(|(c, axis, dir)| face_center(e, c, axis, dir))
        .min_by(|a, b| norm(n, a).total_cmp(&norm(n, b)))
        .ok_or(Error::NoFreeBoundary)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub r: f64,
    pub inside: f64,
    pub outside: f64,
    /// `min(|B_r ∩ E|, |B_r ∖ E|) / r^n`.
    pub ratio: f64,
    /// Below `4h` or leaving the box.
    pub excluded: bool,
    /// One side has no cell in the ball.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub x0: Point,
    pub rows: Vec<DensityRow>,
    /// Minimum ratio over the rows that are not excluded.
    pub min_ratio: f64,
}

/// Whether both `E` and its complement have cells in `B_{2h}(x0)`.
fn is_boundary_point(e: &SetMask, x0: &Point) -> bool {
    let g = &e.grid;
    let ball = Ball::new(*x0, 2.0 * g.h());
    let (mut yes, mut no) = (false, false);
    for c in 0..g.num_cells() {
        if ball.contains(g.dim(), &g.cell_center(c)) {
            if e.inside[c] {
                yes = true;
            } else {
                no = true;
            }
        }
    }
    yes && no
}

/// Density ratios of `E` in the balls `B_r(x0)`.
pub fn density_profile(e: &SetMask, x0: Point, radii: &[f64]) -> Result<DensityProfile> {
    if !is_boundary_point(e, &x0) {
        return Err(Error::NotABoundaryPoint { point: x0 });
    }
    let g = &e.grid;
    let n = g.dim();
    let full = SetMask::full(g);
    let mut rows = Vec::with_capacity(radii.len());
    let mut min_ratio = f64::INFINITY;
    for &r in radii {
        let fits = g.contains_ball(&Ball::new(x0, r));
        if r < 4.0 * g.h() || !fits {
            rows.push(DensityRow {
                r,
                inside: f64::NAN,
                outside: f64::NAN,
                ratio: f64::NAN,
                excluded: true,
                degenerate: false,
            });
            continue;
        }
        let inside = measure_in_ball(e, x0, r)?;
        let outside = measure_in_ball(&full, x0, r)? - inside;
        let ratio = inside.min(outside) / r.powi(n as i32);
        min_ratio = min_ratio.min(ratio);
        rows.push(DensityRow {
            r,
            inside,
            outside,
            ratio,
            excluded: false,
            degenerate: inside == 0.0 || outside == 0.0,
        });
    }
    Ok(DensityProfile {
        x0,
        rows,
        min_ratio,
    })
}

/// Half the volume of the unit ball, the density ratio of a half-space.
pub fn half_space_ratio(n: usize) -> f64 {
    0.5 * unit_ball_volume(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    /// Least-squares slope of `log sup_{B_r(x0)} u` against `log r`.
    pub slope: f64,
    pub intercept: f64,
    /// `(r, sup_{B_r(x0)} u)` for the usable radii.
    pub points: Vec<(f64, f64)>,
    /// `sup_{B_1} u_r = r^{σ/2 − s} sup_{B_r(x0)} u` for the usable radii.
    pub rescaled_sups: Vec<f64>,
    /// Largest over smallest rescaled sup.
    pub rescaled_spread: f64,
}

/// Fits the growth of `u` away from `x0`.
pub fn growth_fit(params: &Params, u: &NodeField, x0: Point, radii: &[f64]) -> Result<GrowthFit> {
    let g = &u.grid;
    let n = g.dim();
    let mut points = Vec::new();
    for &r in radii {
        if !(r > 0.0) || !g.contains_ball(&Ball::new(x0, r)) {
            continue;
        }
        let sup = (0..g.num_nodes())
            .filter(|&i| dist(n, &g.node_coord(i), &x0) <= r * (1.0 + 1e-12))
            .map(|i| u.values[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if sup > 0.0 && sup.is_finite() {
            points.push((r, sup));
        }
    }
    if points.len() < 3 {
        return Err(Error::InsufficientRadii {
            usable: points.len(),
        });
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientRadii { usable: 1 });
    }
    let slope = sxy / sxx;
    let expo = params.growth_exponent();
    let rescaled_sups: Vec<f64> = points.iter().map(|&(r, s)| r.powf(-expo) * s).collect();
    let (lo, hi) = rescaled_sups
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    Ok(GrowthFit {
        slope,
        intercept: my - slope * mx,
        points,
        rescaled_sups,
        rescaled_spread: hi / lo,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionBound {
    pub bound: SupBound,
    /// `sup |u|` over the nodes of `B_{1/2}`.
    pub sup_trace_half: f64,
}

/// Radius of the cylinder on which the extension of a minimizer is bounded.
pub const EXTENSION_RADIUS: f64 = 5.0 / 9.0;

/// Sup of the extension of `u` over `B_{θ 5/9} × (−5/9, 5/9)` against the data.
pub fn extension_bound_check(params: &Params, u: &NodeField) -> Result<ExtensionBound> {
    let grid = HalfCylinderGrid::new(params, &u.grid, EXTENSION_RADIUS)?;
    let ext = extend_poisson(params, u, &grid)?;
    let bound = extension_sup_bound(params, u, &ext, EXTENSION_RADIUS, CYLINDER_FRACTION)?;
    let g = &u.grid;
    let sup_trace_half = (0..g.num_nodes())
        .filter(|&i| norm(g.dim(), &g.node_coord(i)) <= 0.5)
        .map(|i| u.values[i].abs())
        .fold(0.0, f64::max);
    if !bound.sup_extension.is_finite() {
        return Err(Error::NanField { node: 0 });
    }
    Ok(ExtensionBound {
        bound,
        sup_trace_half,
    })
}

/// The extended functional of the state against the competitors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// `c ℰ(ū) + Per_σ(E)` over the unit cylinder.
    pub state_value: f64,
    /// `c ℰ(Ṽ) + Per_σ(F)` for each competitor.
    pub competitor_values: Vec<f64>,
    /// `min (competitor − state) / state`.
    pub worst_relative_defect: f64,
}

/// Compares the state with competitors `(Ṽ, F)`: `F` toggles a random ball
/// inside the unit cylinder and `Ṽ` is the replacement of `ū` vanishing on the
/// trace off `F`. Energies are scaled to the Gagliardo normalization.
pub fn comparison_check<R: Rng>(
    problem: &PairProblem,
    state: &PairState,
    competitors: usize,
    rng: &mut R,
) -> Result<Comparison> {
    let params = &problem.params;
    let base = &state.u.grid;
    let n = base.dim();
    let h = base.h();
    let grid = HalfCylinderGrid::new(params, base, 1.0)?;
    let ext = extend_min(params, &state.u, &grid)?;
    let region = Cylinder::scaled(1.0, CYLINDER_FRACTION);
    let scale = 0.5 * gagliardo_to_extension_ratio(n, params.s);
    let cyl_cells = region.base_cells(base);
    let per = |e: &SetMask| perimeter_terms(&problem.table, e, problem.omega_cells()).total();
    let value = |f: &SetMask| -> Result<f64> {
        let k = SetMask {
            grid: base.clone(),
            inside: (0..base.num_cells())
                .map(|c| cyl_cells[c] && !f.inside[c])
                .collect(),
            exterior: Exterior::Empty,
        };
        let p = ReplacementProblem::new(ext.clone(), k, 0.0, region)?;
        Ok(scale * solve_replacement(&p)?.energy + per(f))
    };
    let state_value = scale * crate::extension::weighted_energy(&ext, &region)? + per(&state.e);
    let mut competitor_values = Vec::with_capacity(competitors);
    for _ in 0..competitors {
        let mut c = [0.0; 2];
        for d in 0..n {
            c[d] = rng.gen_range(-0.5..0.5);
        }
        let ball = Ball::new(c, rng.gen_range(2.0 * h..0.3f64.max(3.0 * h)));
        let mut f = state.e.clone();
        for cell in 0..base.num_cells() {
            if cyl_cells[cell] && ball.contains(n, &base.cell_center(cell)) {
                f.inside[cell] = !f.inside[cell];
            }
        }
        competitor_values.push(value(&f)?);
    }
    let worst_relative_defect = competitor_values
        .iter()
        .map(|v| (v - state_value) / state_value.abs().max(1e-300))
        .fold(f64::INFINITY, f64::min);
    Ok(Comparison {
        state_value,
        competitor_values,
        worst_relative_defect,
    })
}
