//! Fixtures shared by the benchmarks in `benches/`.

use nlfb_core::minimizer::preset_problem;
use nlfb_core::replacement::unit_cylinder_grid;
use nlfb_core::{
    Ball, CellGrid, ExtendedField, Exterior, HalfCylinderGrid, PairProblem, PairState, Params,
    Preset, Result, SetMask,
};

/// A pair on `[−2, 2]ⁿ` with `Ω = B_1`, from the lobe preset.
pub fn pair(n: usize, m: usize) -> Result<(PairProblem, PairState)> {
    let params = Params::new(n, 0.75, 0.5)?;
    let grid = CellGrid::new(n, 2.0, m)?;
    preset_problem(&params, Preset::Lobe, &grid, Ball::centered(1.0), 5.0)
}

/// A set with a wavy boundary and a half-space exterior.
pub fn wavy_set(n: usize, m: usize) -> Result<SetMask> {
    let grid = CellGrid::new(n, 2.0, m)?;
    let exterior = Exterior::HalfSpace {
        axis: 0,
        offset: 0.0,
        upper: false,
    };
    Ok(SetMask::from_fn(&grid, exterior, |x| {
        x[0] < 0.3 * (3.0 * x[1]).sin()
    }))
}

/// The unit half-cylinder with a smooth nonnegative field on it.
pub fn cylinder_field(
    n: usize,
    s: f64,
    m: usize,
) -> Result<(Params, HalfCylinderGrid, ExtendedField)> {
    let params = Params::new(n, s, 0.5)?;
    let grid = unit_cylinder_grid(&params, m)?;
    let field = ExtendedField::from_fn(&grid, |x, z| 1.0 + x[0] * x[0] + (2.0 * x[1]).cos() * z);
    Ok((params, grid, field))
}
