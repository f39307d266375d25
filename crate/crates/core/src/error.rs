use thiserror::Error;

/// Errors raised by the numerical operations of this crate.
///
/// Every variant carries a stable kebab-case code (see [`Error::kind`]) that the
/// command-line front end and the tests match on.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("ball-outside-box: ball of radius {radius} at {center:?} leaves [-{half_width}, {half_width}]^n")]
    BallOutsideBox {
        center: [f64; 2],
        radius: f64,
        half_width: f64,
    },
    #[error("no-free-boundary: the mask is entirely inside or entirely outside")]
    NoFreeBoundary,
    #[error("sets-not-disjoint: both sets contain cell {cell}")]
    SetsNotDisjoint { cell: usize },
    #[error("bad-exponent: {name} = {value} must lie in (0, 1)")]
    BadExponent { name: &'static str, value: f64 },
    #[error("unbounded-interaction: both sets have exterior parts that touch at infinity")]
    UnboundedInteraction,
    #[error("nan-field: non-finite value at node {node}")]
    NanField { node: usize },
    /// `cell` is `None` when the violation lies in the datum beyond the box.
    #[error("pair-not-admissible: worst offending cell {cell:?} (value {value:e})")]
    PairNotAdmissible { cell: Option<usize>, value: f64 },
    #[error("growth-violated: {reason}")]
    GrowthViolated { reason: String },
    #[error("degenerate-comparison: energy difference {denominator:e} is below 1e-12")]
    DegenerateComparison { denominator: f64 },
    #[error("unconstrained-problem: no Dirichlet constraint pins the quadratic form")]
    UnconstrainedProblem,
    #[error("solver-stagnation: relative residual {residual:e} after {iterations} iterations")]
    SolverStagnation { residual: f64, iterations: usize },
    #[error(
        "maximum-principle-violated: node {node} has value {value} outside [{lower}, {upper}]"
    )]
    MaximumPrincipleViolated {
        node: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("monotonicity-preconditions: {reason}")]
    MonotonicityPreconditions { reason: String },
    #[error("radial-range: {reason}")]
    RadialRange { reason: String },
    #[error("rearrangement-needs-nonnegative: node {node} has value {value}")]
    RearrangementNeedsNonnegative { node: usize, value: f64 },
    #[error("not-a-boundary-point: {point:?} is not on the free boundary")]
    NotABoundaryPoint { point: [f64; 2] },
    #[error("insufficient-radii: only {usable} usable radii, need at least 3")]
    InsufficientRadii { usable: usize },
    #[error("invalid-input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable machine-readable code of the error.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::BallOutsideBox { .. } => "ball-outside-box",
            Error::NoFreeBoundary => "no-free-boundary",
            Error::SetsNotDisjoint { .. } => "sets-not-disjoint",
            Error::BadExponent { .. } => "bad-exponent",
            Error::UnboundedInteraction => "unbounded-interaction",
            Error::NanField { .. } => "nan-field",
            Error::PairNotAdmissible { .. } => "pair-not-admissible",
            Error::GrowthViolated { .. } => "growth-violated",
            Error::DegenerateComparison { .. } => "degenerate-comparison",
            Error::UnconstrainedProblem => "unconstrained-problem",
            Error::SolverStagnation { .. } => "solver-stagnation",
            Error::MaximumPrincipleViolated { .. } => "maximum-principle-violated",
            Error::MonotonicityPreconditions { .. } => "monotonicity-preconditions",
            Error::RadialRange { .. } => "radial-range",
            Error::RearrangementNeedsNonnegative { .. } => "rearrangement-needs-nonnegative",
            Error::NotABoundaryPoint { .. } => "not-a-boundary-point",
            Error::InsufficientRadii { .. } => "insufficient-radii",
            Error::InvalidInput(_) => "invalid-input",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
