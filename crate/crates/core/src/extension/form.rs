//! The discrete weighted Dirichlet form on a sub-cylinder.
//!
//! Each cell `c × [z_k, z_{k+1}]` carries its exact weight `h^n ∫ z^a dz` and
//! contributes that weight times the mean of the squared difference quotients
//! over its edges in each direction. The result is a weighted graph Laplacian:
//! symmetric, positive semi-definite, with the constants as its kernel. No
//! condition is imposed at `z = 0`, which is the even-reflection condition.

use rayon::prelude::*;

use super::{Cylinder, HalfCylinderGrid};
use crate::error::{Error, Result};
use crate::solver::{pcg, CgOutcome};

/// Relative residual used by the internal Dirichlet solves.
pub(crate) const INNER_RTOL: f64 = 1e-12;

const NONE: usize = usize::MAX;
const CHUNK: usize = 4096;

/// Sum in fixed-size chunks so the result does not depend on the thread count.
pub(crate) fn det_sum<F: Fn(usize) -> f64 + Sync>(len: usize, f: F) -> f64 {
    let starts: Vec<usize> = (0..len).step_by(CHUNK).collect();
    let parts: Vec<f64> = starts
        .par_iter()
        .map(|&a| (a..(a + CHUNK).min(len)).map(&f).sum::<f64>())
        .collect();
    parts.iter().sum()
}

#[derive(Debug, Clone)]
pub struct WeightedForm {
    grid: HalfCylinderGrid,
    /// Neighbours in the directions `x−, x+, y−, y+, z−, z+`.
    nbr: Vec<[usize; 6]>,
    weight: Vec<[f64; 6]>,
    in_region: Vec<bool>,
    boundary: Vec<bool>,
    factor: f64,
}

impl WeightedForm {
    pub fn new(grid: &HalfCylinderGrid, region: &Cylinder) -> Result<Self> {
        region.check_within(grid)?;
        let base = &grid.base;
        let n = base.dim();
        let h = base.h();
        let nb = grid.num_base_nodes();
        let total = grid.num_nodes();
        let side = base.nodes_per_side();
        let levels = grid.num_levels();

        let nbr: Vec<[usize; 6]> = (0..total)
            .map(|idx| {
                let (i, k) = grid.split(idx);
                let m = base.node_multi(i);
                let mut out = [NONE; 6];
                for d in 0..n {
                    let stride = if d == 0 { 1 } else { side };
                    if m[d] > 0 {
                        out[2 * d] = idx - stride;
                    }
                    if m[d] + 1 < side {
                        out[2 * d + 1] = idx + stride;
                    }
                }
                if k > 0 {
                    out[4] = idx - nb;
                }
                if k + 1 < levels {
                    out[5] = idx + nb;
                }
                out
            })
            .collect();

        let cells = region.base_cells(base);
        let layers = region.layers(grid);
        let mut weight = vec![[0.0; 6]; total];
        let mut in_region = vec![false; total];
        let pairs: &[(usize, usize, usize)] = if n == 1 {
            &[(0, 1, 0)]
        } else {
            &[(0, 1, 0), (2, 3, 0), (0, 2, 1), (1, 3, 1)]
        };
        let per_axis = if n == 1 { 2.0 } else { 4.0 };
        let corners = (1usize << n) as f64;
        for k in 0..layers {
            let wk = h.powi(n as i32) * grid.layer_weight(k);
            let dz = grid.z[k + 1] - grid.z[k];
            for c in (0..base.num_cells()).filter(|&c| cells[c]) {
                let nodes = base.cell_nodes(c);
                for kk in [k, k + 1] {
                    for &(p, q, axis) in pairs {
                        let (i, j) = (grid.index(nodes[p], kk), grid.index(nodes[q], kk));
                        let w = wk / (per_axis * h * h);
                        weight[i][2 * axis + 1] += w;
                        weight[j][2 * axis] += w;
                    }
                }
                for &b in &nodes {
                    let (i, j) = (grid.index(b, k), grid.index(b, k + 1));
                    let w = wk / (corners * dz * dz);
                    weight[i][5] += w;
                    weight[j][4] += w;
                    in_region[i] = true;
                    in_region[j] = true;
                }
            }
        }

        let full = 1usize << n;
        let interior_base: Vec<bool> = (0..nb)
            .map(|i| {
                let around = base.node_cells(i);
                around.len() == full && around.iter().all(|&c| cells[c])
            })
            .collect();
        let boundary = (0..total)
            .map(|idx| {
                let (i, k) = grid.split(idx);
                in_region[idx] && !(interior_base[i] && k < layers)
            })
            .collect();

        Ok(WeightedForm {
            grid: grid.clone(),
            nbr,
            weight,
            in_region,
            boundary,
            factor: if region.symmetric { 2.0 } else { 1.0 },
        })
    }

    pub fn grid(&self) -> &HalfCylinderGrid {
        &self.grid
    }

    pub fn num_nodes(&self) -> usize {
        self.nbr.len()
    }

    /// 2 for a symmetric region, 1 otherwise.
    pub fn factor(&self) -> f64 {
        self.factor
    }

    /// Whether the node is a vertex of some cell of the region.
    pub fn in_region(&self, idx: usize) -> bool {
        self.in_region[idx]
    }

    /// Whether the node lies on the lateral or top boundary of the region.
    pub fn is_boundary(&self, idx: usize) -> bool {
        self.boundary[idx]
    }

    /// Sum of the edge weights at a node.
    pub fn diagonal(&self, idx: usize) -> f64 {
        self.weight[idx].iter().sum()
    }

    /// Symmetric bilinear form `⟨v, w⟩` with `⟨v, v⟩` the energy.
    pub fn pairing(&self, v: &[f64], w: &[f64]) -> f64 {
        let body = det_sum(self.num_nodes(), |i| {
            let mut acc = 0.0;
            for d in [1, 3, 5] {
                let j = self.nbr[i][d];
                let wt = self.weight[i][d];
                if wt != 0.0 {
                    acc += wt * (v[i] - v[j]) * (w[i] - w[j]);
                }
            }
            acc
        });
        self.factor * body
    }

    pub fn energy(&self, v: &[f64]) -> f64 {
        self.pairing(v, v)
    }

    /// `(L v)_i = Σ_j w_ij (v_i − v_j)`, so that `vᵀ L v` is the upper-half energy.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let mut acc = 0.0;
            for d in 0..6 {
                let wt = self.weight[i][d];
                if wt != 0.0 {
                    acc += wt * (v[i] - v[self.nbr[i][d]]);
                }
            }
            *o = acc;
        });
    }

    /// `(L v)_i` at a single node.
    pub fn apply_at(&self, i: usize, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for d in 0..6 {
            let wt = self.weight[i][d];
            if wt != 0.0 {
                acc += wt * (v[i] - v[self.nbr[i][d]]);
            }
        }
        acc
    }

    /// Minimizes the energy over the free nodes of the region (those not
    /// `fixed`), keeping the fixed values, starting from `values`.
    pub fn solve_dirichlet(
        &self,
        fixed: &[bool],
        values: &mut [f64],
        rtol: f64,
    ) -> Result<CgOutcome> {
        let total = self.num_nodes();
        assert_eq!(fixed.len(), total);
        assert_eq!(values.len(), total);
        if !(0..total).any(|i| self.in_region[i] && fixed[i]) {
            return Err(Error::UnconstrainedProblem);
        }
        let free: Vec<usize> = (0..total)
            .filter(|&i| self.in_region[i] && !fixed[i])
            .collect();
        let mut pos = vec![NONE; total];
        for (p, &i) in free.iter().enumerate() {
            pos[i] = p;
        }
        let diag: Vec<f64> = free.iter().map(|&i| self.diagonal(i)).collect();
        let rhs: Vec<f64> = free
            .iter()
            .map(|&i| {
                (0..6)
                    .filter(|&d| self.weight[i][d] != 0.0 && pos[self.nbr[i][d]] == NONE)
                    .map(|d| self.weight[i][d] * values[self.nbr[i][d]])
                    .sum()
            })
            .collect();
        let apply = |x: &[f64], y: &mut [f64]| {
            y.par_iter_mut().enumerate().for_each(|(p, yp)| {
                let i = free[p];
                let mut acc = diag[p] * x[p];
                for d in 0..6 {
                    let wt = self.weight[i][d];
                    if wt != 0.0 {
                        let q = pos[self.nbr[i][d]];
                        if q != NONE {
                            acc -= wt * x[q];
                        }
                    }
                }
                *yp = acc;
            });
        };
        let mut x: Vec<f64> = free.iter().map(|&i| values[i]).collect();
        let max_iter = 20 * free.len() + 1000;
        let outcome = pcg(apply, &diag, &rhs, &mut x, rtol, max_iter)?;
        for (p, &i) in free.iter().enumerate() {
            values[i] = x[p];
        }
        Ok(outcome)
    }
}
