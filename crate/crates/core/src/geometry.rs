//! Uniform cell grids on `[-W, W]^n`, cell-indicator sets and their measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of `R^n`; in one dimension only the first coordinate is used.
pub type Point = [f64; 2];

pub fn pt1(x: f64) -> Point {
    [x, 0.0]
}

pub fn dist(n: usize, a: &Point, b: &Point) -> f64 {
    (0..n).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

pub fn norm(n: usize, a: &Point) -> f64 {
    dist(n, a, &[0.0, 0.0])
}

/// Open ball used for the working domain and for density measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn centered(radius: f64) -> Self {
        Ball {
            center: [0.0, 0.0],
            radius,
        }
    }

    /// Center-in-ball membership test for a cell center.
    pub fn contains(&self, n: usize, p: &Point) -> bool {
        dist(n, p, &self.center) < self.radius
    }
}

/// Uniform grid of `(2m)^n` square cells covering `[-W, W]^n`, `h = W / m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellGrid {
    dim: usize,
    half_width: f64,
    cells_per_half: usize,
}

impl CellGrid {
    pub fn new(dim: usize, half_width: f64, cells_per_half: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidInput(format!("grid dimension {dim}")));
        }
        if cells_per_half == 0 || !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidInput(format!(
                "grid half-width {half_width} with {cells_per_half} cells per half-width"
            )));
        }
        Ok(CellGrid {
            dim,
            half_width,
            cells_per_half,
        })
    }

    /// Grid of half-width `w` and spacing `h`; `w / h` must be an integer.
    pub fn with_spacing(dim: usize, half_width: f64, h: f64) -> Result<Self> {
        let ratio = half_width / h;
        let m = ratio.round();
        if (ratio - m).abs() > 1e-9 * ratio.max(1.0) || m < 1.0 {
            return Err(Error::InvalidInput(format!(
                "half-width {half_width} is not an integer multiple of h = {h}"
            )));
        }
        CellGrid::new(dim, half_width, m as usize)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cells_per_half(&self) -> usize {
        self.cells_per_half
    }

    pub fn h(&self) -> f64 {
        self.half_width / self.cells_per_half as f64
    }

    pub fn cells_per_side(&self) -> usize {
        2 * self.cells_per_half
    }

    pub fn nodes_per_side(&self) -> usize {
        2 * self.cells_per_half + 1
    }

    pub fn num_cells(&self) -> usize {
        self.cells_per_side().pow(self.dim as u32)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes_per_side().pow(self.dim as u32)
    }

    /// Volume of one cell, `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn cell_multi(&self, idx: usize) -> [usize; 2] {
        let side = self.cells_per_side();
        [idx % side, idx / side]
    }

    pub fn cell_index(&self, multi: [usize; 2]) -> usize {
        multi[0] + self.cells_per_side() * multi[1]
    }

    pub fn node_multi(&self, idx: usize) -> [usize; 2] {
        let side = self.nodes_per_side();
        [idx % side, idx / side]
    }

    pub fn node_index(&self, multi: [usize; 2]) -> usize {
        multi[0] + self.nodes_per_side() * multi[1]
    }

    pub fn cell_center(&self, idx: usize) -> Point {
        let m = self.cell_multi(idx);
        let h = self.h();
        let mut p = [0.0; 2];
        for d in 0..self.dim {
            p[d] = -self.half_width + (m[d] as f64 + 0.5) * h;
        }
        p
    }

    /// Lower corner of a cell.
    pub fn cell_origin(&self, idx: usize) -> Point {
        let m = self.cell_multi(idx);
        let h = self.h();
        let mut p = [0.0; 2];
        for d in 0..self.dim {
            p[d] = -self.half_width + m[d] as f64 * h;
        }
        p
    }

    pub fn node_coord(&self, idx: usize) -> Point {
        let m = self.node_multi(idx);
        let h = self.h();
        let mut p = [0.0; 2];
        for d in 0..self.dim {
            p[d] = -self.half_width + m[d] as f64 * h;
        }
        p
    }

    /// Vertices of a cell in tensor order (`x` fastest); two in 1-D, four in 2-D.
    pub fn cell_nodes(&self, idx: usize) -> Vec<usize> {
        let [i, j] = self.cell_multi(idx);
        if self.dim == 1 {
            vec![i, i + 1]
        } else {
            vec![
                self.node_index([i, j]),
                self.node_index([i + 1, j]),
                self.node_index([i, j + 1]),
                self.node_index([i + 1, j + 1]),
            ]
        }
    }

    /// Cells having `node` as a vertex.
    pub fn node_cells(&self, node: usize) -> Vec<usize> {
        let [i, j] = self.node_multi(node);
        let side = self.cells_per_side();
        let range = |k: usize| -> Vec<usize> {
            let mut v = Vec::with_capacity(2);
            if k > 0 {
                v.push(k - 1);
            }
            if k < side {
                v.push(k);
            }
            v
        };
        if self.dim == 1 {
            range(i)
        } else {
            let mut out = Vec::with_capacity(4);
            for &cj in &range(j) {
                for &ci in &range(i) {
                    out.push(self.cell_index([ci, cj]));
                }
            }
            out
        }
    }

    /// Face neighbours of a cell as `(axis, direction, neighbour)` where the
    /// neighbour is `None` past the box boundary.
    pub fn cell_faces(&self, idx: usize) -> Vec<(usize, i32, Option<usize>)> {
        let m = self.cell_multi(idx);
        let side = self.cells_per_side();
        let mut out = Vec::with_capacity(2 * self.dim);
        for axis in 0..self.dim {
            for dir in [-1i32, 1] {
                let k = m[axis] as i64 + dir as i64;
                let nb = if k < 0 || k >= side as i64 {
                    None
                } else {
                    let mut mm = m;
                    mm[axis] = k as usize;
                    Some(self.cell_index(mm))
                };
                out.push((axis, dir, nb));
            }
        }
        out
    }

    /// Whether the closed box contains `p` (coordinates past `n` ignored).
    pub fn box_contains(&self, p: &Point) -> bool {
        (0..self.dim).all(|d| p[d].abs() <= self.half_width * (1.0 + 1e-12))
    }

    /// Whether the ball is contained in the computational box.
    pub fn contains_ball(&self, ball: &Ball) -> bool {
        (0..self.dim).all(|d| {
            ball.center[d] - ball.radius >= -self.half_width * (1.0 + 1e-12)
                && ball.center[d] + ball.radius <= self.half_width * (1.0 + 1e-12)
        })
    }

    /// Whether the ball lies strictly inside the box, at least one cell away from its faces.
    pub fn strictly_contains_ball(&self, ball: &Ball) -> bool {
        let margin = self.half_width - self.h() * (1.0 - 1e-9);
        (0..self.dim).all(|d| {
            ball.center[d] - ball.radius >= -margin && ball.center[d] + ball.radius <= margin
        })
    }

    /// Cells whose centers lie in the ball.
    pub fn cells_in_ball(&self, ball: &Ball) -> Vec<bool> {
        (0..self.num_cells())
            .map(|c| ball.contains(self.dim, &self.cell_center(c)))
            .collect()
    }
}

/// Description of a set beyond the computational box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Exterior {
    /// Nothing beyond the box belongs to the set.
    Empty,
    /// Everything beyond the box belongs to the set.
    Full,
    /// Beyond the box the set is `{ x[axis] > offset }` (`upper`) or `{ x[axis] < offset }`.
    HalfSpace {
        axis: usize,
        offset: f64,
        upper: bool,
    },
    /// The mask is the whole description: the universe is truncated at the box and
    /// no interaction with anything beyond it is counted.
    Truncated,
}

impl Exterior {
    pub fn complement(&self) -> Exterior {
        match *self {
            Exterior::Empty => Exterior::Full,
            Exterior::Full => Exterior::Empty,
            Exterior::HalfSpace {
                axis,
                offset,
                upper,
            } => Exterior::HalfSpace {
                axis,
                offset,
                upper: !upper,
            },
            Exterior::Truncated => Exterior::Truncated,
        }
    }

    /// Membership of a point beyond the box.
    pub fn contains(&self, p: &Point) -> bool {
        match *self {
            Exterior::Empty | Exterior::Truncated => false,
            Exterior::Full => true,
            Exterior::HalfSpace {
                axis,
                offset,
                upper,
            } => {
                if upper {
                    p[axis] > offset
                } else {
                    p[axis] < offset
                }
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Exterior::Empty | Exterior::Truncated)
    }

    /// Parameter interval `[lo, hi)` of the ray `x + t·dir`, `t ≥ t0`, lying in the set.
    pub(crate) fn ray_interval(&self, x: &Point, dir: &Point, t0: f64) -> Option<(f64, f64)> {
        match *self {
            Exterior::Empty | Exterior::Truncated => None,
            Exterior::Full => Some((t0, f64::INFINITY)),
            Exterior::HalfSpace {
                axis,
                offset,
                upper,
            } => {
                // sign * (x[axis] + t dir[axis] - offset) > 0
                let sign = if upper { 1.0 } else { -1.0 };
                let c0 = sign * (x[axis] - offset);
                let c1 = sign * dir[axis];
                let (lo, hi) = if c1 > 0.0 {
                    (-c0 / c1, f64::INFINITY)
                } else if c1 < 0.0 {
                    (f64::NEG_INFINITY, -c0 / c1)
                } else if c0 > 0.0 {
                    (f64::NEG_INFINITY, f64::INFINITY)
                } else {
                    return None;
                };
                let lo = lo.max(t0);
                if hi > lo {
                    Some((lo, hi))
                } else {
                    None
                }
            }
        }
    }
}

/// A measurable set represented by cell membership inside the box plus a
/// symbolic description of what lies beyond it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetMask {
    pub grid: CellGrid,
    pub inside: Vec<bool>,
    pub exterior: Exterior,
}

impl SetMask {
    pub fn new(grid: CellGrid, inside: Vec<bool>, exterior: Exterior) -> Result<Self> {
        if inside.len() != grid.num_cells() {
            return Err(Error::InvalidInput(format!(
                "mask has {} cells, grid has {}",
                inside.len(),
                grid.num_cells()
            )));
        }
        if let Exterior::HalfSpace { axis, .. } = exterior {
            if axis >= grid.dim() {
                return Err(Error::InvalidInput(format!("half-space axis {axis}")));
            }
        }
        Ok(SetMask {
            grid,
            inside,
            exterior,
        })
    }

    pub fn empty(grid: &CellGrid) -> Self {
        SetMask {
            inside: vec![false; grid.num_cells()],
            grid: grid.clone(),
            exterior: Exterior::Empty,
        }
    }

    pub fn full(grid: &CellGrid) -> Self {
        SetMask {
            inside: vec![true; grid.num_cells()],
            grid: grid.clone(),
            exterior: Exterior::Full,
        }
    }

    /// `{ x[axis] > offset }` or `{ x[axis] < offset }`, with the matching exterior.
    pub fn half_space(grid: &CellGrid, axis: usize, offset: f64, upper: bool) -> Self {
        let inside = (0..grid.num_cells())
            .map(|c| {
                let x = grid.cell_center(c)[axis];
                if upper {
                    x > offset
                } else {
                    x < offset
                }
            })
            .collect();
        SetMask {
            grid: grid.clone(),
            inside,
            exterior: Exterior::HalfSpace {
                axis,
                offset,
                upper,
            },
        }
    }

    /// Cells satisfying a predicate on their centers; nothing beyond the box.
    pub fn from_fn<F: Fn(&Point) -> bool>(grid: &CellGrid, exterior: Exterior, f: F) -> Self {
        let inside = (0..grid.num_cells())
            .map(|c| f(&grid.cell_center(c)))
            .collect();
        SetMask {
            grid: grid.clone(),
            inside,
            exterior,
        }
    }

    pub fn complement(&self) -> SetMask {
        SetMask {
            grid: self.grid.clone(),
            inside: self.inside.iter().map(|b| !b).collect(),
            exterior: self.exterior.complement(),
        }
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    /// Measure of the part of the set inside the box, `h^n × #cells`.
    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    /// Cell-wise intersection; the exterior must agree or one side must be empty.
    pub fn intersect_cells(&self, keep: &[bool]) -> SetMask {
        SetMask {
            grid: self.grid.clone(),
            inside: self
                .inside
                .iter()
                .zip(keep)
                .map(|(&a, &b)| a && b)
                .collect(),
            exterior: match self.exterior {
                Exterior::Truncated => Exterior::Truncated,
                _ => Exterior::Empty,
            },
        }
    }

    pub fn is_disjoint(&self, other: &SetMask) -> std::result::Result<(), usize> {
        match self
            .inside
            .iter()
            .zip(&other.inside)
            .position(|(&a, &b)| a && b)
        {
            Some(c) => Err(c),
            None => Ok(()),
        }
    }

    pub fn is_subset(&self, other: &SetMask) -> bool {
        self.inside
            .iter()
            .zip(&other.inside)
            .all(|(&a, &b)| !a || b)
    }

    /// Membership of the region beyond the face of `cell` in direction `(axis, dir)`
    /// when that face lies on the box boundary.
    fn exterior_across(&self, cell: usize, axis: usize, dir: i32) -> bool {
        let mut p = self.grid.cell_center(cell);
        p[axis] += dir as f64 * self.grid.h();
        self.exterior.contains(&p)
    }

    /// Faces separating inside from outside cells, as `(cell, axis, dir)`.
    ///
    /// Faces on the box boundary count when the exterior description differs
    /// from the cell; a truncated exterior contributes no boundary faces.
    pub fn separating_faces(&self) -> Vec<(usize, usize, i32)> {
        let mut out = Vec::new();
        for c in 0..self.grid.num_cells() {
            for (axis, dir, nb) in self.grid.cell_faces(c) {
                match nb {
                    Some(o) => {
                        if dir > 0 && self.inside[c] != self.inside[o] {
                            out.push((c, axis, dir));
                        }
                    }
                    None => {
                        if !matches!(self.exterior, Exterior::Truncated)
                            && self.inside[c] != self.exterior_across(c, axis, dir)
                        {
                            out.push((c, axis, dir));
                        }
                    }
                }
            }
        }
        out
    }
}

/// `|m ∩ B_r(center)|` by the center-in-ball rule.
pub fn measure_in_ball(m: &SetMask, center: Point, r: f64) -> Result<f64> {
    let ball = Ball::new(center, r);
    let grid = &m.grid;
    if !grid.contains_ball(&ball) {
        return Err(Error::BallOutsideBox {
            center,
            radius: r,
            half_width: grid.half_width(),
        });
    }
    let count = (0..grid.num_cells())
        .filter(|&c| m.inside[c] && ball.contains(grid.dim(), &grid.cell_center(c)))
        .count();
    Ok(count as f64 * grid.cell_volume())
}

/// Distance from `x` to the nearest cell face separating inside from outside
/// cells, including the boundary of a half-space exterior beyond the box.
pub fn free_boundary_distance(m: &SetMask, x: Point) -> Result<f64> {
    let grid = &m.grid;
    let n = grid.dim();
    let faces = m.separating_faces();
    let mut best = f64::INFINITY;
    let h = grid.h();
    for &(c, axis, dir) in &faces {
        let center = grid.cell_center(c);
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for d in 0..n {
            if d == axis {
                let f = center[d] + 0.5 * dir as f64 * h;
                lo[d] = f;
                hi[d] = f;
            } else {
                lo[d] = center[d] - 0.5 * h;
                hi[d] = center[d] + 0.5 * h;
            }
        }
        let d2: f64 = (0..n)
            .map(|d| {
                let e = (lo[d] - x[d]).max(0.0).max(x[d] - hi[d]);
                e * e
            })
            .sum();
        best = best.min(d2.sqrt());
    }
    if let Exterior::HalfSpace { axis, offset, .. } = m.exterior {
        if offset.abs() >= grid.half_width() {
            best = best.min(half_space_boundary_distance(
                n,
                &x,
                axis,
                offset,
                grid.half_width(),
            ));
        } else if n == 2 {
            // the boundary line continues beyond the box on both sides
            best = best.min(half_space_boundary_distance(
                n,
                &x,
                axis,
                offset,
                grid.half_width(),
            ));
        }
    }
    let has_inside = m.inside.iter().any(|&b| b);
    let has_outside = m.inside.iter().any(|&b| !b);
    if !(has_inside && has_outside) && faces.is_empty() {
        return Err(Error::NoFreeBoundary);
    }
    if !best.is_finite() {
        return Err(Error::NoFreeBoundary);
    }
    Ok(best)
}

/// Distance from `x` to the part of the hyperplane `{y[axis] = offset}` lying outside the box.
fn half_space_boundary_distance(n: usize, x: &Point, axis: usize, offset: f64, w: f64) -> f64 {
    if n == 1 {
        return if offset.abs() >= w {
            (x[0] - offset).abs()
        } else {
            f64::INFINITY
        };
    }
    let other = 1 - axis;
    let normal = (x[axis] - offset).abs();
    if offset.abs() >= w {
        return normal;
    }
    // the line leaves the box where y[other] = ±w
    let t = x[other].abs();
    let along = if t >= w { 0.0 } else { w - t };
    (normal * normal + along * along).sqrt()
}
