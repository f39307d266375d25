//! Extension by the normalized kernel `c z^{2s} / (|x − y|² + z²)^{(n+2s)/2}`.
//!
//! For a target `(x, z)` the convolution is written in polar coordinates about
//! `x`. Along each ray the trace is piecewise polynomial between grid lines;
//! the radial kernel is integrated in the angle `θ = atan(ρ/z)` for `ρ < z`
//! and in `log ρ` beyond, where it behaves like a power. Past the box the
//! constant part of the datum uses the closed radial tail.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Cylinder, ExtendedField, HalfCylinderGrid};
use crate::error::{Error, Result};
use crate::field::NodeField;
use crate::geometry::{norm, Point};
use crate::params::Params;
use crate::quadrature::{
    box_exit_distance, direction_rule, integrate_graded_unit, poisson_kernel_mass,
    poisson_radial_tail, GaussRule,
};

const SWITCH: f64 = 1.0;
const ANGLE_PANEL: f64 = 0.2;
const LOG_PANEL: f64 = 0.5;

/// The extension of `u` at every node of `grid`, with the trace on `z = 0`.
///
/// Fails with `growth-violated` when the growth integral of `u` is infinite
/// or exceeds `params.lambda_growth`.
pub fn extend_poisson(
    params: &Params,
    u: &NodeField,
    grid: &HalfCylinderGrid,
) -> Result<ExtendedField> {
    params.validate()?;
    if u.grid != grid.base {
        return Err(Error::InvalidInput(
            "trace does not live on the base grid".into(),
        ));
    }
    if (grid.a - params.a()).abs() > 1e-15 {
        return Err(Error::InvalidInput(
            "grid weight exponent differs from 1 − 2s".into(),
        ));
    }
    u.check_growth(params)?;
    let n = params.n;
    let s = params.s;
    let mass = poisson_kernel_mass(n, s);
    let w = grid.base.half_width();
    let rule = GaussRule::legendre(6);
    let axes = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];
    let nb = grid.num_base_nodes();
    let values: Vec<f64> = (0..grid.num_nodes())
        .into_par_iter()
        .map(|idx| {
            if idx < nb {
                return u.values[idx];
            }
            let (x, z) = grid.coord(idx);
            let dirs = direction_rule(n, &x, w, &axes, 8);
            let mut total = 0.0;
            for (dir, wd) in dirs {
                total += wd * ray(u, s, &x, &dir, z, &rule);
            }
            total / mass
        })
        .collect();
    ExtendedField::new(grid.clone(), values)
}

/// `∫_0^∞ u(x + ρω) z^{2s} ρ^{n−1} / (ρ² + z²)^{(n+2s)/2} dρ`.
fn ray(u: &NodeField, s: f64, x: &Point, dir: &Point, z: f64, rule: &GaussRule) -> f64 {
    let g = &u.grid;
    let n = g.dim();
    let w = g.half_width();
    let h = g.h();
    let q = 0.5 * (n as f64 + 2.0 * s);
    let exit = box_exit_distance(n, x, dir, w);
    let at = |rho: f64| u.eval(&[x[0] + rho * dir[0], x[1] + rho * dir[1]]);
    let kernel = |rho: f64| z.powf(2.0 * s) * rho.powi(n as i32 - 1) * (rho * rho + z * z).powf(-q);

    let mut total = 0.0;
    if exit > 0.0 {
        let mut breaks = vec![0.0, exit];
        for d in 0..n {
            if dir[d].abs() < 1e-14 {
                continue;
            }
            for j in 0..=g.cells_per_side() {
                let t = (-w + j as f64 * h - x[d]) / dir[d];
                if t > 1e-12 * w && t < exit * (1.0 - 1e-12) {
                    breaks.push(t);
                }
            }
        }
        let switch = SWITCH * z;
        if switch < exit {
            breaks.push(switch);
        }
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * w);
        let e = 2.0 * s - 1.0;
        for win in breaks.windows(2) {
            let (a, b) = (win[0], win[1]);
            if b <= switch * (1.0 + 1e-12) {
                let (ta, tb) = ((a / z).atan(), (b / z).atan());
                let panels = ((tb - ta) / ANGLE_PANEL).ceil().max(1.0) as usize;
                let dt = (tb - ta) / panels as f64;
                for p in 0..panels {
                    let lo = ta + p as f64 * dt;
                    for (t, wt) in rule.mapped(lo, lo + dt) {
                        let jac = if n == 1 {
                            t.cos().powf(e)
                        } else {
                            t.sin() * t.cos().powf(e)
                        };
                        total += wt * jac * at(z * t.tan());
                    }
                }
            } else {
                let (la, lb) = (a.ln(), b.ln());
                let panels = ((lb - la) / LOG_PANEL).ceil().max(1.0) as usize;
                let dl = (lb - la) / panels as f64;
                for p in 0..panels {
                    let lo = la + p as f64 * dl;
                    for (t, wt) in rule.mapped(lo, lo + dl) {
                        let rho = t.exp();
                        total += wt * rho * kernel(rho) * at(rho);
                    }
                }
            }
        }
    }
    let d = &u.datum;
    total += d.offset * poisson_radial_tail(n, s, exit / z);
    if !d.is_constant() && d.coeff != 0.0 {
        let tail_rule = GaussRule::legendre(12);
        let start = exit.max(1e-300);
        total += integrate_graded_unit(&tail_rule, |v| {
            if v == 0.0 {
                return 0.0;
            }
            let rho = start / v;
            let y = [x[0] + rho * dir[0], x[1] + rho * dir[1]];
            d.coeff * norm(n, &y).powf(d.exponent) * kernel(rho) * start / (v * v)
        });
    }
    total
}

/// `∫_{ℝⁿ ∖ B_r} |u(y)| / |y|^{n+2s} dy`, by rays from the origin.
pub fn exterior_tail_integral(params: &Params, u: &NodeField, r: f64) -> Result<f64> {
    params.validate()?;
    let g = &u.grid;
    let n = g.dim();
    let w = g.half_width();
    let h = g.h();
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("radius {r} must be positive")));
    }
    let d = &u.datum;
    if d.coeff != 0.0 && !d.is_constant() && d.exponent >= 2.0 * params.s {
        return Err(Error::GrowthViolated {
            reason: format!("exterior datum grows like |y|^{}", d.exponent),
        });
    }
    let two_s = 2.0 * params.s;
    let origin = [0.0, 0.0];
    let rule = GaussRule::legendre(6);
    let tail_rule = GaussRule::legendre(12);
    let mut total = 0.0;
    for (dir, wd) in direction_rule(n, &origin, w, &[], 16) {
        let exit = box_exit_distance(n, &origin, &dir, w);
        let at = |rho: f64| u.eval(&[rho * dir[0], rho * dir[1]]).abs();
        if r < exit {
            let mut breaks = vec![r, exit];
            for dd in 0..n {
                if dir[dd].abs() < 1e-14 {
                    continue;
                }
                for j in 0..=g.cells_per_side() {
                    let t = (-w + j as f64 * h) / dir[dd];
                    if t > r && t < exit {
                        breaks.push(t);
                    }
                }
            }
            breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for win in breaks.windows(2) {
                total +=
                    wd * rule.integrate(win[0], win[1], |rho| at(rho) * rho.powf(-1.0 - two_s));
            }
        }
        let start = r.max(exit);
        total += wd
            * integrate_graded_unit(&tail_rule, |v| {
                if v == 0.0 {
                    return 0.0;
                }
                let rho = start / v;
                let y = [rho * dir[0], rho * dir[1]];
                d.eval(n, &y).abs() * rho.powf(-1.0 - two_s) * start / (v * v)
            });
    }
    Ok(total)
}

/// Sup of an extension over `B_{θr} × (−r, r)` against the trace data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupBound {
    /// `sup |ū|` over the nodes of the cylinder.
    pub sup_extension: f64,
    /// `sup |u|` over the nodes of cells meeting `B_r`.
    pub sup_trace: f64,
    /// `∫_{ℝⁿ∖B_r} |u| / |y|^{n+2s}`.
    pub tail: f64,
    /// `sup_extension / (sup_trace + tail)`.
    pub measured_constant: f64,
    /// Constant of the kernel estimate, `max(1, c z^{2s} (1 − |x|/r)^{−n−2s})`
    /// maximized over the cylinder nodes, with `c` the kernel normalization.
    pub kernel_constant: f64,
}

impl SupBound {
    pub fn holds(&self) -> bool {
        self.sup_extension.is_finite()
            && self.sup_extension
                <= self.kernel_constant * (self.sup_trace + self.tail) * (1.0 + 1e-9) + 1e-12
    }
}

pub fn extension_sup_bound(
    params: &Params,
    u: &NodeField,
    ext: &ExtendedField,
    r: f64,
    fraction: f64,
) -> Result<SupBound> {
    let region = Cylinder::scaled(r, fraction);
    region.check_within(&ext.grid)?;
    let g = &u.grid;
    let n = g.dim();
    let sup_extension = ext.sup_abs_in(&region);
    let reach = r + g.h() * (n as f64).sqrt();
    let sup_trace = (0..g.num_nodes())
        .filter(|&i| norm(n, &g.node_coord(i)) < reach)
        .map(|i| u.values[i].abs())
        .fold(0.0, f64::max);
    let tail = exterior_tail_integral(params, u, r)?;

    let cells = region.base_cells(g);
    let mut xi = 0.0f64;
    for c in (0..g.num_cells()).filter(|&c| cells[c]) {
        for i in g.cell_nodes(c) {
            xi = xi.max(norm(n, &g.node_coord(i)) / r);
        }
    }
    let z_max = ext.grid.z[region.layers(&ext.grid)];
    let c_norm = 1.0 / poisson_kernel_mass(n, params.s);
    let q = n as f64 + 2.0 * params.s;
    let kernel_constant = if xi < 1.0 {
        (c_norm * z_max.powf(2.0 * params.s) * (1.0 - xi).powf(-q)).max(1.0)
    } else {
        f64::INFINITY
    };
    let denom = sup_trace + tail;
    Ok(SupBound {
        sup_extension,
        sup_trace,
        tail,
        measured_constant: if denom > 0.0 {
            sup_extension / denom
        } else {
            0.0
        },
        kernel_constant,
    })
}
