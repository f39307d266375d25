//! Slice-wise symmetric decreasing rearrangement in `x` at every level `z`.
//!
//! A slice is the row of node values of one level. Its values are sorted in
//! decreasing order and laid out along a fixed center-outward ordering of the
//! base nodes: alternating right and left of the center when `n = 1`, by
//! distance and then angle when `n = 2`. Every slice keeps its multiset of
//! values exactly.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extension::{Cylinder, ExtendedField, HalfCylinderGrid, WeightedForm};
use crate::geometry::CellGrid;

/// Base nodes in the order in which decreasing values are placed.
pub fn placement_order(base: &CellGrid) -> Vec<usize> {
    let side = base.nodes_per_side();
    let c = (side / 2) as i64;
    if base.dim() == 1 {
        let mut out = vec![c as usize];
        for j in 1..=c {
            out.push((c + j) as usize);
            out.push((c - j) as usize);
        }
        return out;
    }
    let mut nodes: Vec<(i64, f64, usize)> = (0..base.num_nodes())
        .map(|i| {
            let m = base.node_multi(i);
            let (dx, dy) = (m[0] as i64 - c, m[1] as i64 - c);
            let angle = (dy as f64)
                .atan2(dx as f64)
                .rem_euclid(std::f64::consts::TAU);
            (dx * dx + dy * dy, angle, i)
        })
        .collect();
    nodes.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
            .then(a.2.cmp(&b.2))
    });
    nodes.into_iter().map(|t| t.2).collect()
}

/// The rearranged field `v^σ`.
pub fn steiner_slicewise(v: &ExtendedField) -> Result<ExtendedField> {
    if let Some(node) = v.values.iter().position(|&x| x < 0.0) {
        return Err(Error::RearrangementNeedsNonnegative {
            node,
            value: v.values[node],
        });
    }
    let grid = &v.grid;
    let nb = grid.num_base_nodes();
    let order = placement_order(&grid.base);
    let mut values = vec![0.0; v.values.len()];
    values
        .par_chunks_mut(nb)
        .zip(v.values.par_chunks(nb))
        .for_each(|(out, row)| {
            let mut sorted = row.to_vec();
            sorted.sort_by(|a, b| b.total_cmp(a));
            for (&i, x) in order.iter().zip(sorted) {
                out[i] = x;
            }
        });
    ExtendedField::new(grid.clone(), values)
}

/// Energy over the whole grid of a field.
fn whole_energy(v: &ExtendedField) -> Result<f64> {
    let form = WeightedForm::new(&v.grid, &Cylinder::whole(&v.grid))?;
    Ok(form.energy(&v.values))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RearrangementDefect {
    pub energy: f64,
    pub rearranged_energy: f64,
    /// `ℰ(v) − ℰ(v^σ)`.
    pub defect: f64,
}

impl RearrangementDefect {
    /// `defect ≥ −tol ℰ(v)`.
    pub fn holds(&self, tol: f64) -> bool {
        self.defect >= -tol * self.energy
    }
}

/// Energy of `v` and of its rearrangement over the whole grid.
pub fn rearrangement_energy_check(v: &ExtendedField) -> Result<RearrangementDefect> {
    let r = steiner_slicewise(v)?;
    let energy = whole_energy(v)?;
    let rearranged_energy = whole_energy(&r)?;
    Ok(RearrangementDefect {
        energy,
        rearranged_energy,
        defect: energy - rearranged_energy,
    })
}

/// Lumped mass of a node: `h^n` times half the weights of the adjacent layers.
fn slice_mass(grid: &HalfCylinderGrid, k: usize) -> f64 {
    let below = if k > 0 { grid.layer_weight(k - 1) } else { 0.0 };
    let above = if k + 1 < grid.num_levels() {
        grid.layer_weight(k)
    } else {
        0.0
    };
    grid.base.cell_volume() * 0.5 * (below + above)
}

/// Weighted `L²` distance squared, `∫ |z|^a |v − w|²` with lumped masses.
pub fn weighted_l2_sq(v: &ExtendedField, w: &ExtendedField) -> Result<f64> {
    if v.grid != w.grid {
        return Err(Error::InvalidInput("fields live on different grids".into()));
    }
    let nb = v.grid.num_base_nodes();
    Ok((0..v.grid.num_levels())
        .map(|k| {
            let row: f64 = (k * nb..(k + 1) * nb)
                .map(|i| (v.values[i] - w.values[i]).powi(2))
                .sum();
            slice_mass(&v.grid, k) * row
        })
        .sum())
}

/// `∫|z|^a |v − w|² − ∫|z|^a |v^σ − w^σ|²`.
pub fn nonexpansive_check(v: &ExtendedField, w: &ExtendedField) -> Result<f64> {
    let before = weighted_l2_sq(v, w)?;
    let after = weighted_l2_sq(&steiner_slicewise(v)?, &steiner_slicewise(w)?)?;
    Ok(before - after)
}
