//! Set interactions, the fractional perimeter, the localized Gagliardo energy
//! and the total functional.

mod dirichlet;
pub(crate) mod pairs;
mod perimeter;

use serde::{Deserialize, Serialize};

pub use dirichlet::{dirichlet_fractional, DirichletForm, R_FAR_FACTOR};
pub(crate) use perimeter::{check_omega, perimeter_terms, PerimeterTable};
pub use perimeter::{interaction, per_sigma, PerimeterTerms};

use crate::error::{Error, Result};
use crate::field::NodeField;
use crate::geometry::{Ball, Exterior, SetMask};
use crate::params::Params;

/// Tolerance of the admissibility test for pairs.
pub const ADMISSIBILITY_TOL: f64 = 1e-12;

/// Decomposed value of the functional for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `L(E ∩ Ω, Ω ∖ E)`
    pub l_in_out: f64,
    /// `L(E ∩ Ω, (ℝⁿ ∖ E) ∖ Ω)`
    pub l_in_far: f64,
    /// `L(E ∖ Ω, Ω ∖ E)`
    pub l_far_out: f64,
    pub per_sigma: f64,
    pub dirichlet: f64,
    pub total: f64,
    /// Bound for the far-field contribution left out of `dirichlet`.
    pub truncation_error: f64,
}

impl EnergyReport {
    pub fn new(terms: PerimeterTerms, dirichlet: f64, truncation_error: f64) -> Self {
        let per_sigma = terms.total();
        EnergyReport {
            l_in_out: terms.l_in_out,
            l_in_far: terms.l_in_far,
            l_far_out: terms.l_far_out,
            per_sigma,
            dirichlet,
            total: dirichlet + per_sigma,
            truncation_error,
        }
    }
}

/// Checks the one-phase admissibility of `(u, e)`: `u ≥ 0` on the cells of
/// `e` and `u = 0` on every other cell, including beyond the box.
pub fn check_admissible(u: &NodeField, e: &SetMask) -> Result<()> {
    if u.grid != e.grid {
        return Err(Error::InvalidInput(
            "field and set live on different grids".into(),
        ));
    }
    u.check_finite()?;
    let g = &u.grid;
    let mut worst: Option<(usize, f64)> = None;
    for c in 0..g.num_cells() {
        let nodes = g.cell_nodes(c);
        let bad = if e.inside[c] {
            let m = nodes
                .iter()
                .map(|&i| u.values[i])
                .fold(f64::INFINITY, f64::min);
            if m < -ADMISSIBILITY_TOL {
                -m
            } else {
                0.0
            }
        } else {
            nodes.iter().map(|&i| u.values[i].abs()).fold(0.0, f64::max)
        };
        if bad > ADMISSIBILITY_TOL && worst.map_or(true, |(_, w)| bad > w) {
            worst = Some((c, bad));
        }
    }
    if let Some((cell, value)) = worst {
        return Err(Error::PairNotAdmissible {
            cell: Some(cell),
            value,
        });
    }
    if !u.datum.is_zero() {
        let (lo, hi) = u.datum.range(g.dim(), g.half_width());
        let ok = match e.exterior {
            Exterior::Full | Exterior::Truncated => lo >= -ADMISSIBILITY_TOL,
            _ => false,
        };
        if !ok {
            return Err(Error::PairNotAdmissible {
                cell: None,
                value: if lo < 0.0 { lo } else { hi },
            });
        }
    }
    Ok(())
}

/// `F_Ω(u, E)` with its decomposition.
pub fn total_functional(
    params: &Params,
    u: &NodeField,
    e: &SetMask,
    omega: &Ball,
) -> Result<EnergyReport> {
    params.validate()?;
    check_admissible(u, e)?;
    let terms = per_sigma(params.sigma, e, omega)?;
    let (dirichlet, trunc) = dirichlet_fractional(params, u, omega)?;
    Ok(EnergyReport::new(terms, dirichlet, trunc))
}
