//! The set interaction `L(A, B)` and the three-term fractional perimeter.

use rayon::prelude::*;

use super::pairs::{unit_pair, Unit};
use crate::error::{Error, Result};
use crate::geometry::{Ball, CellGrid, Exterior, Point, SetMask};
use crate::params::check_exponent;
use crate::quadrature::{box_exit_distance, direction_rule, GaussRule};

/// Cell-pair interactions indexed by absolute offset.
pub(crate) struct PerimeterTable {
    grid: CellGrid,
    sigma: f64,
    side: usize,
    vals: Vec<f64>,
}

impl PerimeterTable {
    pub fn new(grid: &CellGrid, sigma: f64) -> Self {
        let n = grid.dim();
        let side = grid.cells_per_side();
        let count = if n == 1 { side } else { side * side };
        let scale = grid.h().powf(n as f64 - sigma);
        let vals = (0..count)
            .into_par_iter()
            .map(|k| {
                let o = [(k % side) as i64, (k / side) as i64];
                if o == [0, 0] {
                    f64::INFINITY
                } else if n == 2 && o[1] > o[0] {
                    // filled from the transposed offset below
                    f64::NAN
                } else {
                    scale * unit_pair(n, o, sigma, &Unit)[0]
                }
            })
            .collect::<Vec<_>>();
        let mut vals = vals;
        if n == 2 {
            for j in 0..side {
                for i in 0..j {
                    vals[i + side * j] = vals[j + side * i];
                }
            }
        }
        PerimeterTable {
            grid: grid.clone(),
            sigma,
            side,
            vals,
        }
    }

    fn get(&self, p: usize, q: usize) -> f64 {
        let a = self.grid.cell_multi(p);
        let b = self.grid.cell_multi(q);
        let dx = a[0].abs_diff(b[0]);
        let dy = a[1].abs_diff(b[1]);
        self.vals[dx + self.side * dy]
    }
}

/// One side of an interaction: cells in the box and what lies beyond it.
pub(crate) struct Side<'a> {
    pub cells: &'a [bool],
    pub exterior: Exterior,
}

/// Symmetric evaluation of `L(A, B)`; swapping the sides gives a bit-identical result.
pub(crate) fn interaction_with(table: &PerimeterTable, a: &Side, b: &Side) -> f64 {
    let grid = &table.grid;
    let nc = grid.num_cells();
    let partial: Vec<f64> = (0..nc)
        .into_par_iter()
        .map(|p| {
            let (pa, pb) = (a.cells[p], b.cells[p]);
            if !pa && !pb {
                return 0.0;
            }
            let mut acc = 0.0;
            for q in p + 1..nc {
                if (pa && b.cells[q]) || (pb && a.cells[q]) {
                    acc += table.get(p, q);
                }
            }
            if pa && !b.exterior.is_empty() {
                acc += cell_tail(grid, table.sigma, p, &b.exterior);
            } else if pb && !a.exterior.is_empty() {
                acc += cell_tail(grid, table.sigma, p, &a.exterior);
            }
            acc
        })
        .collect();
    partial.iter().sum()
}

/// `L(A, B)` for disjoint sets on the same grid.
pub fn interaction(sigma: f64, a: &SetMask, b: &SetMask) -> Result<f64> {
    check_exponent("sigma", sigma)?;
    if a.grid != b.grid {
        return Err(Error::InvalidInput("sets live on different grids".into()));
    }
    if let Err(cell) = a.is_disjoint(b) {
        return Err(Error::SetsNotDisjoint { cell });
    }
    if !a.exterior.is_empty() && !b.exterior.is_empty() {
        return Err(Error::UnboundedInteraction);
    }
    let table = PerimeterTable::new(&a.grid, sigma);
    Ok(interaction_with(
        &table,
        &Side {
            cells: &a.inside,
            exterior: a.exterior,
        },
        &Side {
            cells: &b.inside,
            exterior: b.exterior,
        },
    ))
}

/// The three interaction terms of the perimeter of `E` in `Ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerimeterTerms {
    pub l_in_out: f64,
    pub l_in_far: f64,
    pub l_far_out: f64,
}

impl PerimeterTerms {
    pub fn total(&self) -> f64 {
        self.l_in_out + self.l_in_far + self.l_far_out
    }
}

pub(crate) fn check_omega(grid: &CellGrid, omega: &Ball) -> Result<Vec<bool>> {
    if !grid.strictly_contains_ball(omega) {
        return Err(Error::BallOutsideBox {
            center: omega.center,
            radius: omega.radius,
            half_width: grid.half_width(),
        });
    }
    Ok(grid.cells_in_ball(omega))
}

pub(crate) fn perimeter_terms(
    table: &PerimeterTable,
    e: &SetMask,
    omega_cells: &[bool],
) -> PerimeterTerms {
    let pick = |want_e: bool, want_omega: bool| -> Vec<bool> {
        e.inside
            .iter()
            .zip(omega_cells)
            .map(|(&x, &o)| x == want_e && o == want_omega)
            .collect()
    };
    let e_in = pick(true, true);
    let out_in = pick(false, true);
    let e_far = pick(true, false);
    let out_far = pick(false, false);
    let empty = Exterior::Empty;
    PerimeterTerms {
        l_in_out: interaction_with(
            table,
            &Side {
                cells: &e_in,
                exterior: empty,
            },
            &Side {
                cells: &out_in,
                exterior: empty,
            },
        ),
        l_in_far: interaction_with(
            table,
            &Side {
                cells: &e_in,
                exterior: empty,
            },
            &Side {
                cells: &out_far,
                exterior: e.exterior.complement(),
            },
        ),
        l_far_out: interaction_with(
            table,
            &Side {
                cells: &e_far,
                exterior: e.exterior,
            },
            &Side {
                cells: &out_in,
                exterior: empty,
            },
        ),
    }
}

/// Three-term decomposition of the fractional perimeter of `e` in `omega`.
pub fn per_sigma(sigma: f64, e: &SetMask, omega: &Ball) -> Result<PerimeterTerms> {
    check_exponent("sigma", sigma)?;
    let omega_cells = check_omega(&e.grid, omega)?;
    let table = PerimeterTable::new(&e.grid, sigma);
    Ok(perimeter_terms(&table, e, &omega_cells))
}

/// Interaction of one cell with the part of `ext` beyond the box.
fn cell_tail(grid: &CellGrid, sigma: f64, cell: usize, ext: &Exterior) -> f64 {
    if grid.dim() == 1 {
        let o = grid.cell_origin(cell)[0];
        return interval_tail(sigma, o, o + grid.h(), grid.half_width(), ext);
    }
    let w = grid.half_width();
    let mut breaks = Vec::new();
    let mut special: Vec<Point> = Vec::new();
    if let Exterior::HalfSpace { axis, offset, .. } = *ext {
        // directions parallel to the boundary line, and its crossings with the box
        if axis == 0 {
            breaks.extend([0.5 * std::f64::consts::PI, 1.5 * std::f64::consts::PI]);
        } else {
            breaks.extend([0.0, std::f64::consts::PI]);
        }
        if offset.abs() < w {
            let mut p = [0.0; 2];
            p[axis] = offset;
            for s in [-w, w] {
                p[1 - axis] = s;
                special.push(p);
            }
        }
    }
    let mut total = 0.0;
    for (x, wx) in cell_points(grid, cell) {
        let mut local = breaks.clone();
        for p in &special {
            local.push((p[1] - x[1]).atan2(p[0] - x[0]));
        }
        face_grading(&x, w, grid.h(), &mut local);
        for (dir, wd) in direction_rule(2, &x, w, &local, 8) {
            let exit = box_exit_distance(2, &x, &dir, w);
            if let Some((lo, hi)) = ext.ray_interval(&x, &dir, exit) {
                let hi_term = if hi.is_finite() { hi.powf(-sigma) } else { 0.0 };
                total += wx * wd * (lo.powf(-sigma) - hi_term) / sigma;
            }
        }
    }
    total
}

/// Angular breaks for a point close to a box face. Through that face the
/// integrand behaves like `cos^σ` of the angle to the normal, so the pieces are
/// refined geometrically towards the two tangent directions.
fn face_grading(x: &Point, w: f64, h: f64, breaks: &mut Vec<f64>) {
    use std::f64::consts::FRAC_PI_2;
    for (axis, normal) in [
        (0, 0.0),
        (1, FRAC_PI_2),
        (0, 2.0 * FRAC_PI_2),
        (1, 3.0 * FRAC_PI_2),
    ] {
        let sign = if normal == 0.0 || normal == FRAC_PI_2 {
            1.0
        } else {
            -1.0
        };
        let d = w - sign * x[axis];
        if d >= h {
            continue;
        }
        let mut gap = d / w;
        while gap < 1.0 {
            breaks.push(normal + FRAC_PI_2 - gap);
            breaks.push(normal - FRAC_PI_2 + gap);
            gap *= 2.0;
        }
    }
}

/// Quadrature points of a cell, graded towards the box faces it touches.
fn cell_points(grid: &CellGrid, cell: usize) -> Vec<(Point, f64)> {
    let h = grid.h();
    let w = grid.half_width();
    let o = grid.cell_origin(cell);
    let rule = GaussRule::legendre(5);
    let axis_points = |d: usize| -> Vec<(f64, f64)> {
        let (a, b) = (o[d], o[d] + h);
        let touches_low = (a + w).abs() < 1e-12 * w;
        let touches_high = (b - w).abs() < 1e-12 * w;
        if !touches_low && !touches_high {
            return rule.mapped(a, b).collect();
        }
        let mut pts = Vec::new();
        let mut far = 1.0;
        for _ in 0..40 {
            let near = 0.5 * far;
            for (t, wt) in rule.mapped(near, far) {
                let x = if touches_high { b - t * h } else { a + t * h };
                pts.push((x, wt * h));
            }
            far = near;
        }
        pts
    };
    let px = axis_points(0);
    let py = axis_points(1);
    let mut out = Vec::with_capacity(px.len() * py.len());
    for &(y, wy) in &py {
        for &(x, wx) in &px {
            out.push(([x, y], wx * wy));
        }
    }
    out
}

fn h_antiderivative(sigma: f64, t: f64) -> f64 {
    t.powf(1.0 - sigma) / (sigma * (1.0 - sigma))
}

/// `L([a, b], [c, d])` for `b ≤ c`, with `d` possibly infinite.
pub(crate) fn interval_pair(sigma: f64, a: f64, b: f64, c: f64, d: f64) -> f64 {
    let hh = |t: f64| h_antiderivative(sigma, t);
    let near = hh(c - a) - hh(c - b);
    if d.is_finite() {
        near + hh(d - b) - hh(d - a)
    } else {
        near
    }
}

fn interval_tail(sigma: f64, a: f64, b: f64, w: f64, ext: &Exterior) -> f64 {
    // pieces of the exterior as intervals on the right and on the left of the box
    let (right, left): (Option<(f64, f64)>, Option<(f64, f64)>) = match *ext {
        Exterior::Empty | Exterior::Truncated => (None, None),
        Exterior::Full => (Some((w, f64::INFINITY)), Some((w, f64::INFINITY))),
        Exterior::HalfSpace { offset, upper, .. } => {
            if upper {
                // {x > offset}
                let r = Some((offset.max(w), f64::INFINITY));
                let l = if offset < -w {
                    Some((w, -offset))
                } else {
                    None
                };
                (r, l)
            } else {
                // {x < offset}
                let l = Some(((-offset).max(w), f64::INFINITY));
                let r = if offset > w { Some((w, offset)) } else { None };
                (r, l)
            }
        }
    };
    let mut total = 0.0;
    if let Some((c, d)) = right {
        if d > c {
            total += interval_pair(sigma, a, b, c, d);
        }
    }
    if let Some((c, d)) = left {
        // mirror x ↦ −x
        if d > c {
            total += interval_pair(sigma, -b, -a, c, d);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid1(w: f64, m: usize) -> CellGrid {
        CellGrid::new(1, w, m).unwrap()
    }

    #[test]
    fn interval_pair_reference_value() {
        // ∫₁²(t−1)t^{−3/2}dt + ∫₂³(3−t)t^{−3/2}dt
        let s2 = 2f64.sqrt();
        let s3 = 3f64.sqrt();
        let exact = 3.0 * s2 - 4.0 + (-6.0 / s3 - 2.0 * s3 + 6.0 / s2 + 2.0 * s2);
        assert_relative_eq!(
            interval_pair(0.5, 0.0, 1.0, 2.0, 3.0),
            exact,
            max_relative = 1e-14
        );
        assert!((exact - 0.38551).abs() < 1e-5);
    }

    #[test]
    fn grid_interaction_of_unit_intervals() {
        let g = grid1(4.0, 8);
        let a = SetMask::from_fn(&g, Exterior::Empty, |p| p[0] > 0.0 && p[0] < 1.0);
        let b = SetMask::from_fn(&g, Exterior::Empty, |p| p[0] > 2.0 && p[0] < 3.0);
        let v = interaction(0.5, &a, &b).unwrap();
        assert!((v - 0.38551).abs() < 1e-3);
        assert_eq!(v, interaction(0.5, &b, &a).unwrap());
    }

    #[test]
    fn empty_and_errors() {
        let g = grid1(1.0, 8);
        let a = SetMask::empty(&g);
        let b = SetMask::half_space(&g, 0, 0.0, true);
        assert_eq!(interaction(0.4, &a, &b).unwrap(), 0.0);
        assert_eq!(interaction(1.2, &a, &b).unwrap_err().kind(), "bad-exponent");
        assert_eq!(
            interaction(0.4, &b, &b).unwrap_err().kind(),
            "sets-not-disjoint"
        );
        let c = SetMask::half_space(&g, 0, 0.0, false);
        assert_eq!(
            interaction(0.4, &b, &c).unwrap_err().kind(),
            "unbounded-interaction"
        );
    }

    #[test]
    fn one_dimensional_tail_is_exact() {
        // the cell [W − h, W] against [W, ∞) is H(h)
        let sigma = 0.3;
        let g = grid1(1.0, 4);
        let a = SetMask::from_fn(&g, Exterior::Empty, |p| p[0] > 0.75);
        let b = SetMask::new(
            g.clone(),
            vec![false; 8],
            Exterior::HalfSpace {
                axis: 0,
                offset: 1.0,
                upper: true,
            },
        )
        .unwrap();
        let v = interaction(sigma, &a, &b).unwrap();
        assert_relative_eq!(v, h_antiderivative(sigma, 0.25), max_relative = 1e-14);
    }

    #[test]
    fn two_dimensional_tail_against_far_cells() {
        // a cell against the outside of a box must equal the same cell against
        // the grid cells of a larger box plus that larger box's outside
        let sigma = 0.5;
        let small = CellGrid::new(2, 1.0, 4).unwrap();
        let big = CellGrid::new(2, 2.0, 8).unwrap();
        let centre = |p: &Point| (p[0] - 0.125).abs() < 0.1 && (p[1] - 0.375).abs() < 0.1;
        let a_small = SetMask::from_fn(&small, Exterior::Empty, centre);
        let b_small = SetMask::from_fn(&small, Exterior::Full, |_| false);
        let a_big = SetMask::from_fn(&big, Exterior::Empty, centre);
        let b_big = SetMask::from_fn(&big, Exterior::Full, |p| {
            p[0].abs() > 1.0 || p[1].abs() > 1.0
        });
        let v_small = interaction(sigma, &a_small, &b_small).unwrap();
        let v_big = interaction(sigma, &a_big, &b_big).unwrap();
        assert_relative_eq!(v_small, v_big, max_relative = 1e-8);
    }

    #[test]
    fn boundary_cell_tail_converges() {
        // a cell touching the box face, against everything beyond it, equals
        // the limit of cell-pair sums in a larger box
        let sigma = 0.4;
        let small = CellGrid::new(2, 1.0, 2).unwrap();
        let big = CellGrid::new(2, 2.0, 4).unwrap();
        let corner = |p: &Point| p[0] > 0.5 && p[1] > 0.5;
        let a_small = SetMask::from_fn(&small, Exterior::Empty, corner);
        let b_small = SetMask::from_fn(&small, Exterior::Full, |_| false);
        let a_big = SetMask::from_fn(&big, Exterior::Empty, |p| {
            corner(p) && p[0] < 1.0 && p[1] < 1.0
        });
        let b_big = SetMask::from_fn(&big, Exterior::Full, |p| {
            p[0].abs() > 1.0 || p[1].abs() > 1.0
        });
        let v_small = interaction(sigma, &a_small, &b_small).unwrap();
        let v_big = interaction(sigma, &a_big, &b_big).unwrap();
        assert_relative_eq!(v_small, v_big, max_relative = 2e-7);
    }

    #[test]
    fn half_space_perimeter_in_unit_interval() {
        // E = {x < 0}, Ω = B_1: every term is explicit and the total is 2^{1−σ}/(σ(1−σ))
        for &sigma in &[0.25, 0.5, 0.75] {
            let g = grid1(2.0, 32);
            let e = SetMask::half_space(&g, 0, 0.0, false);
            let terms = per_sigma(sigma, &e, &Ball::centered(1.0)).unwrap();
            let exact = 2f64.powf(1.0 - sigma) / (sigma * (1.0 - sigma));
            assert_relative_eq!(terms.total(), exact, max_relative = 1e-12);
        }
    }
}
