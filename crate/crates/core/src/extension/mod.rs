//! Extended variables: the half-cylinder grid over the base grid, fields on
//! it, the weighted energy `∫ |z|^a |∇v|²` and the Poisson-type extension.

pub(crate) mod form;
mod poisson;

use serde::{Deserialize, Serialize};

pub use form::WeightedForm;
pub use poisson::{extend_poisson, extension_sup_bound, exterior_tail_integral, SupBound};

use crate::energy::dirichlet_fractional;
use crate::error::{Error, Result};
use crate::field::NodeField;
use crate::geometry::{Ball, CellGrid, Point};
use crate::params::Params;
use statrs::function::gamma::gamma;

/// Default ratio between consecutive level spacings.
pub const LEVEL_RATIO: f64 = 1.3;
/// Default radius fraction of the cylinder `B_{θr} × (−r, r)`.
pub const CYLINDER_FRACTION: f64 = 0.9;

/// Base grid times graded levels `0 = z_0 < z_1 < … < z_K` in the upper half.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfCylinderGrid {
    pub base: CellGrid,
    pub z: Vec<f64>,
    /// Weight exponent `a = 1 − 2s`.
    pub a: f64,
}

impl HalfCylinderGrid {
    /// Levels refined geometrically towards `z = 0`: the first step is `h/4`,
    /// each step grows by [`LEVEL_RATIO`] up to `h`, and the top is `z_top`.
    pub fn new(params: &Params, base: &CellGrid, z_top: f64) -> Result<Self> {
        let h = base.h();
        Self::graded(params, base, z_top, 0.25 * h, LEVEL_RATIO, h)
    }

    pub fn graded(
        params: &Params,
        base: &CellGrid,
        z_top: f64,
        first: f64,
        ratio: f64,
        max_step: f64,
    ) -> Result<Self> {
        if !(z_top > 0.0 && first > 0.0 && ratio >= 1.0 && max_step >= first) {
            return Err(Error::InvalidInput(format!(
                "bad level grading: top {z_top}, first step {first}, ratio {ratio}, max step {max_step}"
            )));
        }
        let mut z = vec![0.0];
        let mut step = first.min(z_top);
        let mut top = 0.0;
        while top < z_top {
            let mut next = top + step;
            // avoid a sliver at the top
            if next > z_top - 0.25 * step {
                next = z_top;
            }
            z.push(next);
            top = next;
            step = (step * ratio).min(max_step);
        }
        Self::with_levels(params, base, z)
    }

    pub fn with_levels(params: &Params, base: &CellGrid, z: Vec<f64>) -> Result<Self> {
        params.validate()?;
        if params.n != base.dim() {
            return Err(Error::InvalidInput(
                "dimension of params and grid differ".into(),
            ));
        }
        if z.len() < 2
            || z[0] != 0.0
            || z.windows(2).any(|w| !(w[1] > w[0]))
            || !z.iter().all(|v| v.is_finite())
        {
            return Err(Error::InvalidInput(
                "levels must start at 0 and increase strictly".into(),
            ));
        }
        if z[1] > base.h() * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "first level {} exceeds the cell size {}",
                z[1],
                base.h()
            )));
        }
        Ok(HalfCylinderGrid {
            base: base.clone(),
            z,
            a: params.a(),
        })
    }

    pub fn num_base_nodes(&self) -> usize {
        self.base.num_nodes()
    }

    pub fn num_levels(&self) -> usize {
        self.z.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_base_nodes() * self.num_levels()
    }

    pub fn z_top(&self) -> f64 {
        *self.z.last().unwrap()
    }

    pub fn index(&self, base_node: usize, level: usize) -> usize {
        level * self.num_base_nodes() + base_node
    }

    /// `(base node, level)` of a node index.
    pub fn split(&self, idx: usize) -> (usize, usize) {
        let nb = self.num_base_nodes();
        (idx % nb, idx / nb)
    }

    pub fn coord(&self, idx: usize) -> (Point, f64) {
        let (i, k) = self.split(idx);
        (self.base.node_coord(i), self.z[k])
    }

    /// `∫_{z_k}^{z_{k+1}} z^a dz`, exact.
    pub fn layer_weight(&self, k: usize) -> f64 {
        let b = 1.0 + self.a;
        (self.z[k + 1].powf(b) - self.z[k].powf(b)) / b
    }
}

/// The sub-cylinder `B_radius × (0, height)`, or `B_radius × (−height, height)`
/// when `symmetric`. Base cells are selected by the center-in-ball rule and
/// layers by lying below `height`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub radius: f64,
    pub height: f64,
    pub symmetric: bool,
}

impl Cylinder {
    /// `B_{θr} × (−r, r)`.
    pub fn scaled(r: f64, fraction: f64) -> Self {
        Cylinder {
            radius: fraction * r,
            height: r,
            symmetric: true,
        }
    }

    /// Every cell of the grid, upper half only.
    pub fn whole(grid: &HalfCylinderGrid) -> Self {
        Cylinder {
            radius: f64::INFINITY,
            height: grid.z_top(),
            symmetric: false,
        }
    }

    pub fn base_cells(&self, base: &CellGrid) -> Vec<bool> {
        if self.radius.is_infinite() {
            return vec![true; base.num_cells()];
        }
        base.cells_in_ball(&Ball::centered(self.radius))
    }

    /// Number of layers below `height`.
    pub fn layers(&self, grid: &HalfCylinderGrid) -> usize {
        grid.z[1..]
            .iter()
            .take_while(|&&z| z <= self.height * (1.0 + 1e-12))
            .count()
    }

    pub fn check_within(&self, grid: &HalfCylinderGrid) -> Result<()> {
        let w = grid.base.half_width();
        if !(self.height > 0.0) || self.height > grid.z_top() * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "cylinder height {} outside (0, {}]",
                self.height,
                grid.z_top()
            )));
        }
        if !(self.radius > 0.0) || (self.radius.is_finite() && self.radius > w * (1.0 + 1e-12)) {
            return Err(Error::BallOutsideBox {
                center: [0.0, 0.0],
                radius: self.radius,
                half_width: w,
            });
        }
        if self.layers(grid) == 0 || !self.base_cells(&grid.base).iter().any(|&b| b) {
            return Err(Error::InvalidInput("cylinder contains no cell".into()));
        }
        Ok(())
    }
}

/// Nodal values on a half-cylinder grid; the lower half is the mirror image.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedField {
    pub grid: HalfCylinderGrid,
    pub values: Vec<f64>,
}

impl ExtendedField {
    pub fn new(grid: HalfCylinderGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::InvalidInput(format!(
                "expected {} values, got {}",
                grid.num_nodes(),
                values.len()
            )));
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NanField { node });
        }
        Ok(ExtendedField { grid, values })
    }

    pub fn constant(grid: &HalfCylinderGrid, c: f64) -> Self {
        ExtendedField {
            grid: grid.clone(),
            values: vec![c; grid.num_nodes()],
        }
    }

    pub fn from_fn<F: Fn(&Point, f64) -> f64>(grid: &HalfCylinderGrid, f: F) -> Self {
        let values = (0..grid.num_nodes())
            .map(|i| {
                let (x, z) = grid.coord(i);
                f(&x, z)
            })
            .collect();
        ExtendedField {
            grid: grid.clone(),
            values,
        }
    }

    /// Values on `z = 0`.
    pub fn trace(&self) -> &[f64] {
        &self.values[..self.grid.num_base_nodes()]
    }

    pub fn level(&self, k: usize) -> &[f64] {
        let nb = self.grid.num_base_nodes();
        &self.values[k * nb..(k + 1) * nb]
    }

    pub fn get(&self, base_node: usize, level: usize) -> f64 {
        self.values[self.grid.index(base_node, level)]
    }

    pub fn combine(&self, a: f64, other: &ExtendedField, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidInput("fields live on different grids".into()));
        }
        Ok(ExtendedField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn scale(&self, t: f64) -> Self {
        ExtendedField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| t * v).collect(),
        }
    }

    /// Largest `|v|` over the nodes of the cylinder's cells.
    pub fn sup_abs_in(&self, region: &Cylinder) -> f64 {
        let g = &self.grid;
        let cells = region.base_cells(&g.base);
        let layers = region.layers(g);
        let mut in_base = vec![false; g.num_base_nodes()];
        for (c, _) in cells.iter().enumerate().filter(|(_, &b)| b) {
            for i in g.base.cell_nodes(c) {
                in_base[i] = true;
            }
        }
        let mut m = 0.0f64;
        for k in 0..=layers {
            for (i, _) in in_base.iter().enumerate().filter(|(_, &b)| b) {
                m = m.max(self.get(i, k).abs());
            }
        }
        m
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `∫_region |z|^a |∇v|²`, doubled when the region is symmetric.
pub fn weighted_energy(v: &ExtendedField, region: &Cylinder) -> Result<f64> {
    let form = WeightedForm::new(&v.grid, region)?;
    Ok(form.energy(&v.values))
}

/// Minimizer of the weighted energy over the whole grid with trace `f` on
/// `z = 0` and the Poisson extension of `f` on the lateral and top faces.
pub fn extend_min(
    params: &Params,
    f: &NodeField,
    grid: &HalfCylinderGrid,
) -> Result<ExtendedField> {
    let mut field = extend_poisson(params, f, grid)?;
    let form = WeightedForm::new(grid, &Cylinder::whole(grid))?;
    let nb = grid.num_base_nodes();
    let fixed: Vec<bool> = (0..grid.num_nodes())
        .map(|i| i < nb || form.is_boundary(i))
        .collect();
    form.solve_dirichlet(&fixed, &mut field.values, form::INNER_RTOL)?;
    Ok(field)
}

/// Gagliardo and extended energy differences of two traces and their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    pub gagliardo_difference: f64,
    pub extended_difference: f64,
    pub ratio: f64,
}

/// Compares `D(u) − D(v_ref)` with `ℰ(U) − ℰ(V)`, where `U`, `V` minimize the
/// weighted energy with traces `u`, `v_ref`.
pub fn seminorm_consistency(
    params: &Params,
    u: &NodeField,
    v_ref: &NodeField,
    omega: &Ball,
    grid: &HalfCylinderGrid,
) -> Result<Consistency> {
    if u.grid != grid.base || v_ref.grid != grid.base {
        return Err(Error::InvalidInput(
            "traces do not live on the base grid".into(),
        ));
    }
    if u.datum != v_ref.datum {
        return Err(Error::InvalidInput(
            "traces must share the exterior datum".into(),
        ));
    }
    let base = &grid.base;
    let omega_cells = base.cells_in_ball(omega);
    let mut allowed = vec![false; base.num_nodes()];
    for c in (0..base.num_cells()).filter(|&c| omega_cells[c]) {
        for i in base.cell_nodes(c) {
            allowed[i] = true;
        }
    }
    if let Some(i) = (0..base.num_nodes()).find(|&i| !allowed[i] && u.values[i] != v_ref.values[i])
    {
        return Err(Error::InvalidInput(format!(
            "u − v_ref is not supported in the ball (node {i})"
        )));
    }
    let (du, _) = dirichlet_fractional(params, u, omega)?;
    let (dv, _) = dirichlet_fractional(params, v_ref, omega)?;
    let whole = Cylinder::whole(grid);
    let eu = weighted_energy(&extend_min(params, u, grid)?, &whole)?;
    let ev = weighted_energy(&extend_min(params, v_ref, grid)?, &whole)?;
    let denominator = eu - ev;
    if !(denominator.abs() >= 1e-12) {
        return Err(Error::DegenerateComparison { denominator });
    }
    Ok(Consistency {
        gagliardo_difference: du - dv,
        extended_difference: denominator,
        ratio: (du - dv) / denominator,
    })
}

/// Ratio between the Gagliardo energy on `ℝⁿ` and the weighted energy of the
/// optimal extension over the upper half space.
///
/// Both are multiples of `∫ |ξ|^{2s} |û|²`: the Gagliardo energy with factor
/// `2 / C(n, s)` where `C(n, s) = 4^s Γ(n/2 + s) / (π^{n/2} |Γ(−s)|)`, the
/// extension energy with factor `2^{1−2s} Γ(1−s) / Γ(s)`.
pub fn gagliardo_to_extension_ratio(n: usize, s: f64) -> f64 {
    let c_ns = 4f64.powf(s) * gamma(0.5 * n as f64 + s)
        / (std::f64::consts::PI.powf(0.5 * n as f64) * gamma(-s).abs());
    let d_s = 2f64.powf(1.0 - 2.0 * s) * gamma(1.0 - s) / gamma(s);
    2.0 / (c_ns * d_s)
}

#[cfg(test)]
mod tests;
