//! Continuous piecewise-(bi)linear fields on grid nodes with a symbolic
//! datum beyond the computational box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm, CellGrid, Point};
use crate::params::Params;
use crate::quadrature::{box_exit_distance, direction_rule, integrate_graded_unit, GaussRule};

/// Values of a field beyond the box: `g(y) = offset + coeff · |y|^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExteriorDatum {
    pub offset: f64,
    pub coeff: f64,
    pub exponent: f64,
}

impl ExteriorDatum {
    pub fn constant(c: f64) -> Self {
        ExteriorDatum {
            offset: c,
            coeff: 0.0,
            exponent: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn power(offset: f64, coeff: f64, exponent: f64) -> Self {
        ExteriorDatum {
            offset,
            coeff,
            exponent,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeff == 0.0
    }

    pub fn is_zero(&self) -> bool {
        self.is_constant() && self.offset == 0.0
    }

    pub fn eval(&self, n: usize, y: &Point) -> f64 {
        if self.is_constant() {
            self.offset
        } else {
            self.offset + self.coeff * norm(n, y).powf(self.exponent)
        }
    }

    /// Lower and upper bounds of the datum beyond a box of half-width `w`.
    pub fn range(&self, n: usize, w: f64) -> (f64, f64) {
        if self.is_constant() {
            return (self.offset, self.offset);
        }
        let at_box = self.offset + self.coeff * w.powf(self.exponent);
        let corner = self.offset + self.coeff * (w * (n as f64).sqrt()).powf(self.exponent);
        let at_infinity = if self.exponent > 0.0 {
            self.offset + self.coeff.signum() * f64::INFINITY
        } else if self.exponent < 0.0 {
            self.offset
        } else {
            self.offset + self.coeff
        };
        let lo = at_box.min(corner).min(at_infinity);
        let hi = at_box.max(corner).max(at_infinity);
        (lo, hi)
    }

    pub fn is_finite(&self) -> bool {
        self.offset.is_finite() && self.coeff.is_finite() && self.exponent.is_finite()
    }

    fn shifted(&self, c: f64) -> Self {
        ExteriorDatum {
            offset: self.offset + c,
            ..*self
        }
    }

    fn scaled(&self, t: f64) -> Self {
        ExteriorDatum {
            offset: self.offset * t,
            coeff: self.coeff * t,
            exponent: self.exponent,
        }
    }
}

/// A scalar function on the nodes of a [`CellGrid`], interpolated by
/// piecewise linear (1-D) or bilinear (2-D) hats, together with its datum
/// beyond the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeField {
    pub grid: CellGrid,
    pub values: Vec<f64>,
    pub datum: ExteriorDatum,
}

impl NodeField {
    pub fn new(grid: CellGrid, values: Vec<f64>, datum: ExteriorDatum) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::InvalidInput(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.num_nodes()
            )));
        }
        Ok(NodeField {
            grid,
            values,
            datum,
        })
    }

    pub fn constant(grid: &CellGrid, c: f64) -> Self {
        NodeField {
            values: vec![c; grid.num_nodes()],
            grid: grid.clone(),
            datum: ExteriorDatum::constant(c),
        }
    }

    pub fn zeros(grid: &CellGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn from_fn<F: Fn(&Point) -> f64>(grid: &CellGrid, datum: ExteriorDatum, f: F) -> Self {
        let values = (0..grid.num_nodes())
            .map(|i| f(&grid.node_coord(i)))
            .collect();
        NodeField {
            grid: grid.clone(),
            values,
            datum,
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        if let Some(node) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NanField { node });
        }
        if !self.datum.is_finite() {
            return Err(Error::NanField {
                node: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn add_constant(&self, c: f64) -> Self {
        NodeField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
            datum: self.datum.shifted(c),
        }
    }

    pub fn scale(&self, t: f64) -> Self {
        NodeField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * t).collect(),
            datum: self.datum.scaled(t),
        }
    }

    /// `a·self + b·other`; the data must be both constant or share exponents.
    pub fn combine(&self, a: f64, other: &NodeField, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidInput("fields live on different grids".into()));
        }
        let datum = if other.datum.coeff == 0.0
            || self.datum.coeff == 0.0
            || self.datum.exponent == other.datum.exponent
        {
            let exponent = if self.datum.coeff != 0.0 {
                self.datum.exponent
            } else {
                other.datum.exponent
            };
            ExteriorDatum {
                offset: a * self.datum.offset + b * other.datum.offset,
                coeff: a * self.datum.coeff + b * other.datum.coeff,
                exponent,
            }
        } else {
            return Err(Error::InvalidInput(
                "cannot combine power data with different exponents".into(),
            ));
        };
        Ok(NodeField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            datum,
        })
    }

    /// Value at an arbitrary point; the datum is used beyond the box.
    pub fn eval(&self, p: &Point) -> f64 {
        let g = &self.grid;
        if !g.box_contains(p) {
            return self.datum.eval(g.dim(), p);
        }
        let h = g.h();
        let side = g.cells_per_side();
        let mut cell = [0usize; 2];
        let mut t = [0.0; 2];
        for d in 0..g.dim() {
            let s = ((p[d] + g.half_width()) / h).max(0.0);
            let k = (s.floor() as usize).min(side - 1);
            cell[d] = k;
            t[d] = (s - k as f64).clamp(0.0, 1.0);
        }
        let c = g.cell_index(cell);
        let nodes = g.cell_nodes(c);
        let w = hat_weights(g.dim(), &t);
        nodes
            .iter()
            .zip(w.iter())
            .map(|(&i, &wi)| wi * self.values[i])
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
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

    /// `∫ |u(y)| / (1 + |y|^{n+2s}) dy`.
    ///
    /// Returns `growth-violated` when the datum grows too fast for the
    /// integral to be finite.
    pub fn growth_integral(&self, params: &Params) -> Result<f64> {
        self.check_finite()?;
        let n = self.grid.dim();
        let q = n as f64 + 2.0 * params.s;
        let weight = |y: &Point| 1.0 / (1.0 + norm(n, y).powf(q));
        let inside = integrate_over_box(&self.grid, 4, |y| self.eval(y).abs() * weight(y));
        let d = &self.datum;
        if d.coeff != 0.0 && d.exponent >= 2.0 * params.s {
            return Err(Error::GrowthViolated {
                reason: format!(
                    "exterior datum grows like |y|^{} and 2s = {}",
                    d.exponent,
                    2.0 * params.s
                ),
            });
        }
        let w = self.grid.half_width();
        let dirs = direction_rule(n, &[0.0, 0.0], w, &[], 16);
        let rule = GaussRule::legendre(12);
        let mut outside = 0.0;
        for (dir, wt) in &dirs {
            let t0 = box_exit_distance(n, &[0.0, 0.0], dir, w);
            // ρ = t0 / u maps (t0, ∞) onto (0, 1)
            let ray = integrate_graded_unit(&rule, |u| {
                if u == 0.0 {
                    return 0.0;
                }
                let rho = t0 / u;
                let y = [rho * dir[0], rho * dir[1]];
                let val = d.eval(n, &y).abs();
                val * rho.powi(n as i32 - 1) * weight(&y) * t0 / (u * u)
            });
            outside += wt * ray;
        }
        Ok(inside + outside)
    }

    /// Growth integral, failing with `growth-violated` when it exceeds `lambda_growth`.
    pub fn check_growth(&self, params: &Params) -> Result<f64> {
        let g = self.growth_integral(params)?;
        if !(g <= params.lambda_growth) {
            return Err(Error::GrowthViolated {
                reason: format!(
                    "growth integral {g} exceeds the bound {}",
                    params.lambda_growth
                ),
            });
        }
        Ok(g)
    }
}

/// Hat-function weights at local coordinates `t` of a cell, in the vertex
/// order of [`CellGrid::cell_nodes`].
pub fn hat_weights(n: usize, t: &[f64; 2]) -> Vec<f64> {
    if n == 1 {
        vec![1.0 - t[0], t[0]]
    } else {
        let (a, b) = (t[0], t[1]);
        vec![(1.0 - a) * (1.0 - b), a * (1.0 - b), (1.0 - a) * b, a * b]
    }
}

/// Tensor Gauss integration over the whole box, cell by cell.
pub(crate) fn integrate_over_box<F: Fn(&Point) -> f64>(grid: &CellGrid, order: usize, f: F) -> f64 {
    let rule = GaussRule::legendre(order);
    let h = grid.h();
    let n = grid.dim();
    let mut total = 0.0;
    for c in 0..grid.num_cells() {
        let o = grid.cell_origin(c);
        if n == 1 {
            total += rule.integrate(o[0], o[0] + h, |x| f(&[x, 0.0]));
        } else {
            for (x, wx) in rule.mapped(o[0], o[0] + h) {
                for (y, wy) in rule.mapped(o[1], o[1] + h) {
                    total += wx * wy * f(&[x, y]);
                }
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn interpolation_reproduces_affine_functions() {
        let g = CellGrid::new(2, 1.0, 4).unwrap();
        let f = NodeField::from_fn(&g, ExteriorDatum::zero(), |p| 0.3 + 2.0 * p[0] - p[1]);
        for p in [[0.11, -0.37], [0.99, 0.99], [-1.0, 0.25]] {
            assert_relative_eq!(f.eval(&p), 0.3 + 2.0 * p[0] - p[1], epsilon = 1e-14);
        }
        assert_eq!(f.eval(&[3.0, 0.0]), 0.0);
    }

    #[test]
    fn growth_integral_of_constant_matches_radial_formula() {
        // ∫_R 1/(1+|y|^{1+2s}) dy = 2π / ((1+2s) sin(π/(1+2s)))
        let s = 0.5;
        let p = Params::new(1, s, 0.5).unwrap();
        let g = CellGrid::new(1, 2.0, 64).unwrap();
        let one = NodeField::constant(&g, 1.0);
        let q = 1.0 + 2.0 * s;
        let exact = 2.0 * PI / (q * (PI / q).sin());
        assert_relative_eq!(one.growth_integral(&p).unwrap(), exact, max_relative = 1e-8);
    }

    #[test]
    fn growth_integral_in_the_plane() {
        // ∫_{R^2} 1/(1+|y|^{2+2s}) dy = 2π · π / ((2+2s) sin(2π/(2+2s)))
        let s = 0.3;
        let p = Params::new(2, s, 0.5).unwrap();
        let g = CellGrid::new(2, 1.0, 8).unwrap();
        let one = NodeField::constant(&g, 1.0);
        let q = 2.0 + 2.0 * s;
        let exact = 2.0 * PI * PI / (q * (2.0 * PI / q).sin());
        assert_relative_eq!(one.growth_integral(&p).unwrap(), exact, max_relative = 1e-6);
    }

    #[test]
    fn fast_growing_datum_is_rejected() {
        let p = Params::new(1, 0.25, 0.5).unwrap();
        let g = CellGrid::new(1, 1.0, 8).unwrap();
        let f = NodeField::new(
            g.clone(),
            vec![0.0; g.num_nodes()],
            ExteriorDatum::power(0.0, 1.0, 0.6),
        )
        .unwrap();
        assert_eq!(f.growth_integral(&p).unwrap_err().kind(), "growth-violated");
        let tight = p.with_lambda(1e-3).unwrap();
        assert_eq!(
            NodeField::constant(&g, 1.0)
                .check_growth(&tight)
                .unwrap_err()
                .kind(),
            "growth-violated"
        );
    }

    #[test]
    fn non_finite_values_are_reported() {
        let g = CellGrid::new(1, 1.0, 4).unwrap();
        let mut f = NodeField::zeros(&g);
        f.values[3] = f64::NAN;
        assert_eq!(f.check_finite().unwrap_err(), Error::NanField { node: 3 });
    }
}
