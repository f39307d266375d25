//! Numerical laboratory for the one-phase nonlocal free boundary problem.

pub mod energy;
pub mod error;
pub mod extension;
pub mod field;
pub mod geometry;
pub mod minimizer;
pub mod params;
pub mod quadrature;
pub mod rearrangement;
pub mod replacement;
pub mod solver;

pub use energy::{
    check_admissible, dirichlet_fractional, interaction, per_sigma, total_functional,
    DirichletForm, EnergyReport, PerimeterTerms,
};
pub use error::{Error, Result};
pub use extension::{
    extend_poisson, seminorm_consistency, weighted_energy, Cylinder, ExtendedField,
    HalfCylinderGrid, WeightedForm,
};
pub use field::{ExteriorDatum, NodeField};
pub use geometry::{
    free_boundary_distance, measure_in_ball, Ball, CellGrid, Exterior, Point, SetMask,
};
pub use minimizer::{minimize_pair, PairProblem, PairState, Preset, Schedule};
pub use params::Params;
pub use rearrangement::steiner_slicewise;
pub use replacement::{solve_replacement, Replacement, ReplacementProblem};
