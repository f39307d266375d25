//! Fractional harmonic replacement: minimize the weighted energy over the
//! cylinder with the datum `φ` on its lateral and top faces and the value `γ`
//! on a trace set `K ⊂ {z = 0}`, and the properties of the minimizer.
//!
//! A node of `z = 0` is constrained when it is a vertex of a cell of `K`
//! off the lateral boundary; boundary nodes keep `φ`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{
    Cylinder, ExtendedField, HalfCylinderGrid, WeightedForm, CYLINDER_FRACTION,
};
use crate::geometry::{Ball, CellGrid, Exterior, SetMask};
use crate::params::Params;

/// Relative residual of the replacement solves.
pub const SOLVER_RTOL: f64 = 1e-12;

/// Base grid `[−1, 1]ⁿ` with `m` cells per half side and levels up to `z = 1`,
/// which carries the unit cylinder `B_{9/10} × (−1, 1)`.
pub fn unit_cylinder_grid(params: &Params, m: usize) -> Result<HalfCylinderGrid> {
    let base = CellGrid::new(params.n, 1.0, m)?;
    HalfCylinderGrid::new(params, &base, 1.0)
}

#[derive(Debug, Clone)]
pub struct ReplacementProblem {
    /// Boundary datum and starting guess; only its values on the lateral and
    /// top faces of the cylinder enter the problem.
    pub phi: ExtendedField,
    /// The trace set `K`, as cells of the base grid.
    pub k_mask: SetMask,
    pub gamma: f64,
    pub region: Cylinder,
    form: WeightedForm,
    k_nodes: Vec<bool>,
}

impl ReplacementProblem {
    pub fn new(phi: ExtendedField, k_mask: SetMask, gamma: f64, region: Cylinder) -> Result<Self> {
        let grid = &phi.grid;
        if k_mask.grid != grid.base {
            return Err(Error::InvalidInput(
                "K does not live on the base grid".into(),
            ));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "constraint value {gamma} is not finite"
            )));
        }
        let form = WeightedForm::new(grid, &region)?;
        let cells = region.base_cells(&grid.base);
        let mut k_nodes = vec![false; grid.num_nodes()];
        for c in (0..grid.base.num_cells()).filter(|&c| k_mask.inside[c]) {
            if !cells[c] {
                return Err(Error::InvalidInput(format!(
                    "cell {c} of K lies outside the cylinder"
                )));
            }
            for i in grid
                .base
                .cell_nodes(c)
                .into_iter()
                .filter(|&i| !form.is_boundary(i))
            {
                k_nodes[i] = true;
            }
        }
        Ok(ReplacementProblem {
            phi,
            k_mask,
            gamma,
            region,
            form,
            k_nodes,
        })
    }

    /// The problem on `B_{9/10} × (−1, 1)`.
    pub fn on_unit_cylinder(phi: ExtendedField, k_mask: SetMask, gamma: f64) -> Result<Self> {
        Self::new(phi, k_mask, gamma, Cylinder::scaled(1.0, CYLINDER_FRACTION))
    }

    pub fn grid(&self) -> &HalfCylinderGrid {
        &self.phi.grid
    }

    pub fn form(&self) -> &WeightedForm {
        &self.form
    }

    /// Nodes of `z = 0` fixed to `γ`.
    pub fn k_nodes(&self) -> &[bool] {
        &self.k_nodes
    }

    /// Nodes whose value is prescribed: the faces of the cylinder and `K`.
    pub fn fixed(&self) -> Vec<bool> {
        (0..self.grid().num_nodes())
            .map(|i| self.form.is_boundary(i) || self.k_nodes[i])
            .collect()
    }

    /// Nodes carrying unknowns.
    pub fn free(&self) -> Vec<bool> {
        (0..self.grid().num_nodes())
            .map(|i| self.form.in_region(i) && !self.form.is_boundary(i) && !self.k_nodes[i])
            .collect()
    }

    pub fn with_k(&self, k_mask: SetMask) -> Result<Self> {
        Self::new(self.phi.clone(), k_mask, self.gamma, self.region)
    }

    pub fn with_phi(&self, phi: ExtendedField) -> Result<Self> {
        Self::new(phi, self.k_mask.clone(), self.gamma, self.region)
    }

    /// Supremum of `φ` over the faces of the cylinder.
    pub fn boundary_sup(&self) -> f64 {
        (0..self.grid().num_nodes())
            .filter(|&i| self.form.is_boundary(i))
            .map(|i| self.phi.values[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn boundary_inf(&self) -> f64 {
        (0..self.grid().num_nodes())
            .filter(|&i| self.form.is_boundary(i))
            .map(|i| self.phi.values[i])
            .fold(f64::INFINITY, f64::min)
    }

    /// Energy of a field over the cylinder (both halves).
    pub fn energy(&self, v: &ExtendedField) -> f64 {
        self.form.energy(&v.values)
    }
}

#[derive(Debug, Clone)]
pub struct Replacement {
    pub field: ExtendedField,
    pub energy: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// The minimizer `Φ^φ_{K,γ}`, starting from `φ`.
pub fn solve_replacement(p: &ReplacementProblem) -> Result<Replacement> {
    solve_from(p, &p.phi.values)
}

/// The minimizer starting from arbitrary values at the free nodes. Nodes off
/// the cylinder keep `φ`.
pub fn solve_from(p: &ReplacementProblem, initial: &[f64]) -> Result<Replacement> {
    let fixed = p.fixed();
    let mut values: Vec<f64> = (0..p.grid().num_nodes())
        .map(|i| {
            if p.k_nodes[i] {
                p.gamma
            } else if fixed[i] || !p.form.in_region(i) {
                p.phi.values[i]
            } else {
                initial[i]
            }
        })
        .collect();
    let outcome = p.form.solve_dirichlet(&fixed, &mut values, SOLVER_RTOL)?;
    let field = ExtendedField::new(p.grid().clone(), values)?;
    Ok(Replacement {
        energy: p.energy(&field),
        field,
        iterations: outcome.iterations,
        residual: outcome.residual,
    })
}

/// Random field built from a tensor hat bump in `(x, z)`, zero outside the
/// cylinder and on the nodes flagged by `vanish`.
pub fn random_test_field<R: Rng>(
    p: &ReplacementProblem,
    vanish: &[bool],
    rng: &mut R,
    nonnegative: bool,
) -> Vec<f64> {
    let grid = p.grid();
    let n = grid.base.dim();
    let r = p.region.radius.min(grid.base.half_width());
    let mut centre = [0.0; 2];
    let mut width = [1.0; 2];
    for d in 0..n {
        centre[d] = rng.gen_range(-0.8 * r..0.8 * r);
        width[d] = rng.gen_range(0.1..0.6) * r;
    }
    let zc = rng.gen_range(0.0..0.5 * p.region.height);
    let zw = rng.gen_range(0.1..0.6) * p.region.height;
    let amp = if nonnegative {
        rng.gen_range(0.5..2.0)
    } else {
        rng.gen_range(-2.0..2.0)
    };
    (0..grid.num_nodes())
        .map(|i| {
            if vanish[i] || !p.form.in_region(i) {
                return 0.0;
            }
            let (x, z) = grid.coord(i);
            let mut v = amp * (1.0 - (z - zc).abs() / zw).max(0.0);
            for d in 0..n {
                v *= (1.0 - (x[d] - centre[d]).abs() / width[d]).max(0.0);
            }
            v
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orthogonality {
    /// `max |⟨Φ, ψ⟩| / ([Φ] [ψ])`.
    pub residual: f64,
    /// `max |ℰ(Φ ± ψ) − ℰ(Φ) − ℰ(ψ)| / (ℰ(Φ) + ℰ(ψ))`.
    pub pythagoras: f64,
}

/// Pairs `Φ` with random `ψ` vanishing on `K` and on the faces.
pub fn orthogonality_residual<R: Rng>(
    phi: &ExtendedField,
    p: &ReplacementProblem,
    trials: usize,
    rng: &mut R,
) -> Orthogonality {
    let form = p.form();
    let fixed = p.fixed();
    let e_phi = form.energy(&phi.values);
    let mut out = Orthogonality {
        residual: 0.0,
        pythagoras: 0.0,
    };
    for _ in 0..trials {
        let psi = random_test_field(p, &fixed, rng, false);
        let e_psi = form.energy(&psi);
        if e_psi == 0.0 {
            continue;
        }
        let pair = form.pairing(&phi.values, &psi);
        if e_phi > 0.0 {
            out.residual = out.residual.max(pair.abs() / (e_phi * e_psi).sqrt());
        }
        for sign in [1.0, -1.0] {
            let sum: Vec<f64> = phi
                .values
                .iter()
                .zip(&psi)
                .map(|(a, b)| a + sign * b)
                .collect();
            let defect = (form.energy(&sum) - e_phi - e_psi).abs() / (e_phi + e_psi);
            out.pythagoras = out.pythagoras.max(defect);
        }
    }
    out
}

/// Discrete weighted divergence `(L Φ)_i` at every node (zero off the cylinder).
pub fn nodal_divergence(phi: &ExtendedField, p: &ReplacementProblem) -> Vec<f64> {
    let mut out = vec![0.0; phi.values.len()];
    p.form().apply(&phi.values, &mut out);
    out
}

/// `max |(L Φ)_i| / L_ii` over the free nodes.
pub fn harmonicity_residual(phi: &ExtendedField, p: &ReplacementProblem) -> f64 {
    let div = nodal_divergence(phi, p);
    let free = p.free();
    (0..div.len())
        .filter(|&i| free[i])
        .map(|i| div[i].abs() / p.form().diagonal(i))
        .fold(0.0, f64::max)
}

/// Extrema of a solved field over the cylinder, checked against the maximum
/// principles: `Φ ≤ max(sup φ, γ)` always and `Φ ≥ 0` when `φ, γ ≥ 0`.
pub fn check_bounds(phi: &ExtendedField, p: &ReplacementProblem) -> Result<(f64, f64)> {
    const TOL: f64 = 1e-9;
    let form = p.form();
    let has_k = p.k_nodes.iter().any(|&b| b);
    let sup_phi = p.boundary_sup();
    let upper = if has_k { sup_phi.max(p.gamma) } else { sup_phi };
    let nonneg = p.boundary_inf() >= 0.0 && (!has_k || p.gamma >= 0.0);
    let lower = if nonneg { 0.0 } else { f64::NEG_INFINITY };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in (0..phi.values.len()).filter(|&i| form.in_region(i)) {
        let v = phi.values[i];
        lo = lo.min(v);
        hi = hi.max(v);
        if v > upper + TOL || v < lower - TOL {
            return Err(Error::MaximumPrincipleViolated {
                node: i,
                value: v,
                lower,
                upper,
            });
        }
    }
    Ok((lo, hi))
}

/// `max ⟨Φ, ψ⟩ / ([Φ] [ψ])` over random `ψ ≥ 0` vanishing on the faces.
pub fn subharmonicity_check<R: Rng>(
    phi: &ExtendedField,
    p: &ReplacementProblem,
    trials: usize,
    rng: &mut R,
) -> f64 {
    let form = p.form();
    let faces: Vec<bool> = (0..phi.values.len()).map(|i| form.is_boundary(i)).collect();
    let e_phi = form.energy(&phi.values);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let psi = random_test_field(p, &faces, rng, true);
        let e_psi = form.energy(&psi);
        if e_psi == 0.0 {
            continue;
        }
        let pair = form.pairing(&phi.values, &psi);
        let scale = (e_phi * e_psi).sqrt();
        worst = worst.max(if scale > 0.0 { pair / scale } else { pair });
    }
    worst
}

/// `ℰ(Φ^φ_{K∪A}) − ℰ(Φ^φ_K)` for the problem's `K`.
pub fn energy_increment(p: &ReplacementProblem, a_mask: &SetMask) -> Result<f64> {
    if let Err(cell) = p.k_mask.is_disjoint(a_mask) {
        return Err(Error::SetsNotDisjoint { cell });
    }
    let base = solve_replacement(p)?;
    let union = p.with_k(union(&p.k_mask, a_mask))?;
    let more = solve_replacement(&union)?;
    Ok(more.energy - base.energy)
}

pub(crate) fn union(a: &SetMask, b: &SetMask) -> SetMask {
    SetMask {
        grid: a.grid.clone(),
        inside: a
            .inside
            .iter()
            .zip(&b.inside)
            .map(|(x, y)| *x || *y)
            .collect(),
        exterior: Exterior::Empty,
    }
}

/// Increments of the two configurations and `RHS − LHS` of the comparison
/// `ℰ(Φ^{φ1}_{K1∪A1}) − ℰ(Φ^{φ1}_{K1}) ≤ ℰ(Φ^{φ2}_{K2∪A2}) − ℰ(Φ^{φ2}_{K2})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monotonicity {
    pub lhs: f64,
    pub rhs: f64,
    pub defect: f64,
}

/// Checks the hypotheses `0 ≤ φ1 ≤ φ2`, `K2 ⊆ K1`, `A1 ⊆ A2` and compares the
/// increments. `p1` and `p2` carry `(φ1, K1)` and `(φ2, K2)`, both with `γ = 0`.
pub fn monotonicity_check(
    p1: &ReplacementProblem,
    p2: &ReplacementProblem,
    a1: &SetMask,
    a2: &SetMask,
) -> Result<Monotonicity> {
    let bad = |reason: &str| {
        Err(Error::MonotonicityPreconditions {
            reason: reason.into(),
        })
    };
    if p1.grid() != p2.grid() || p1.region != p2.region {
        return bad("the two problems live on different cylinders");
    }
    if p1.gamma != 0.0 || p2.gamma != 0.0 {
        return bad("both constraint values must vanish");
    }
    let form = p1.form();
    for i in (0..p1.grid().num_nodes()).filter(|&i| form.is_boundary(i)) {
        let (f1, f2) = (p1.phi.values[i], p2.phi.values[i]);
        if f1 < 0.0 || f1 > f2 {
            return bad(&format!("0 ≤ φ1 ≤ φ2 fails at node {i}"));
        }
    }
    if !p2.k_mask.is_subset(&p1.k_mask) {
        return bad("K2 is not contained in K1");
    }
    if !a1.is_subset(a2) {
        return bad("A1 is not contained in A2");
    }
    let a1_new = minus(a1, &p1.k_mask);
    let a2_new = minus(a2, &p2.k_mask);
    let lhs = energy_increment(p1, &a1_new)?;
    let rhs = energy_increment(p2, &a2_new)?;
    Ok(Monotonicity {
        lhs,
        rhs,
        defect: rhs - lhs,
    })
}

fn minus(a: &SetMask, b: &SetMask) -> SetMask {
    SetMask {
        grid: a.grid.clone(),
        inside: a
            .inside
            .iter()
            .zip(&b.inside)
            .map(|(x, y)| *x && !*y)
            .collect(),
        exterior: Exterior::Empty,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialIncrement {
    /// `ℰ(Φ^c_{B_ρ}) − ℰ(Φ^c_{B_r})`.
    pub increment: f64,
    /// `|B_ρ ∖ B_r|` at cell resolution.
    pub measure: f64,
}

impl RadialIncrement {
    pub fn ratio(&self) -> f64 {
        if self.measure > 0.0 {
            self.increment / self.measure
        } else {
            0.0
        }
    }
}

/// Increment between the concentric constraint balls `B_r ⊂ B_ρ` for the
/// constant datum `c` on the unit cylinder of `grid`.
pub fn radial_increment(
    grid: &HalfCylinderGrid,
    rho: f64,
    r: f64,
    c: f64,
) -> Result<RadialIncrement> {
    if !(0.25..=0.75).contains(&rho) {
        return Err(Error::RadialRange {
            reason: format!("ρ = {rho} must lie in [1/4, 3/4]"),
        });
    }
    if !(r > 0.0 && r < rho) {
        return Err(Error::RadialRange {
            reason: format!("r = {r} must lie in (0, ρ)"),
        });
    }
    if !(c >= 0.0) {
        return Err(Error::RadialRange {
            reason: format!("c = {c} must be nonnegative"),
        });
    }
    let base = &grid.base;
    let ball = |radius: f64| {
        SetMask::new(
            base.clone(),
            base.cells_in_ball(&Ball::centered(radius)),
            Exterior::Empty,
        )
    };
    let (outer, inner) = (ball(rho)?, ball(r)?);
    let phi = ExtendedField::constant(grid, c);
    let p_inner = ReplacementProblem::on_unit_cylinder(phi, inner.clone(), 0.0)?;
    let p_outer = p_inner.with_k(outer.clone())?;
    let e_inner = solve_replacement(&p_inner)?.energy;
    let e_outer = solve_replacement(&p_outer)?.energy;
    Ok(RadialIncrement {
        increment: e_outer - e_inner,
        measure: (outer.count() - inner.count()) as f64 * base.cell_volume(),
    })
}

/// Relaxed replacement: the constraint on `K` becomes `v ≤ γ`, solved by
/// projected successive over-relaxation from the equality-free start `φ`.
pub fn solve_relaxed(
    p: &ReplacementProblem,
    omega: f64,
    tol: f64,
    max_sweeps: usize,
) -> Result<Replacement> {
    let form = p.form();
    let grid = p.grid();
    let total = grid.num_nodes();
    let unknown: Vec<usize> = (0..total)
        .filter(|&i| form.in_region(i) && !form.is_boundary(i))
        .collect();
    let mut v = p.phi.values.clone();
    for &i in &unknown {
        if p.k_nodes[i] {
            v[i] = v[i].min(p.gamma);
        }
    }
    let mut sweeps = 0;
    let mut change = f64::INFINITY;
    let scale = v.iter().fold(1e-300f64, |m, x| m.max(x.abs()));
    while sweeps < max_sweeps && change > tol * scale {
        change = 0.0;
        for &i in &unknown {
            let d = form.diagonal(i);
            let mut next = v[i] - omega * form.apply_at(i, &v) / d;
            if p.k_nodes[i] {
                next = next.min(p.gamma);
            }
            change = change.max((next - v[i]).abs());
            v[i] = next;
        }
        sweeps += 1;
    }
    if change > tol * scale {
        return Err(Error::SolverStagnation {
            residual: change / scale,
            iterations: sweeps,
        });
    }
    let field = ExtendedField::new(grid.clone(), v)?;
    Ok(Replacement {
        energy: p.energy(&field),
        field,
        iterations: sweeps,
        residual: change / scale,
    })
}

/// Union of random balls (intervals when `n = 1`) with centers in
/// `B_{0.7 radius}`, restricted to cells strictly inside `B_radius`.
pub fn random_trace_set<R: Rng>(
    base: &CellGrid,
    radius: f64,
    pieces: usize,
    rng: &mut R,
) -> SetMask {
    let n = base.dim();
    let h = base.h();
    let mut balls = Vec::with_capacity(pieces);
    for _ in 0..pieces {
        let mut c = [0.0; 2];
        loop {
            for d in 0..n {
                c[d] = rng.gen_range(-0.7 * radius..0.7 * radius);
            }
            if crate::geometry::norm(n, &c) <= 0.7 * radius {
                break;
            }
        }
        let rr = rng.gen_range(h..(0.3 * radius).max(1.5 * h));
        balls.push(Ball::new(c, rr));
    }
    let inner = Ball::centered(radius - 1.5 * h * (n as f64).sqrt());
    SetMask::from_fn(base, Exterior::Empty, |x| {
        inner.contains(n, x) && balls.iter().any(|b| b.contains(n, x))
    })
}

#[cfg(test)]
mod tests;
