use crate::geom::ManifoldTag;

/// Errors raised by the solvers and closed-form evaluators.
#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum Error {
    #[error("manifold mismatch: expected {expected}, found {found}")]
    ManifoldMismatch { expected: ManifoldTag, found: ManifoldTag },

    #[error("point is off the manifold {manifold} (constraint violation {violation:.3e})")]
    NotOnManifold { manifold: ManifoldTag, violation: f64 },

    #[error("vector is not tangent (inner product with base {violation:.3e})")]
    NotTangent { violation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty sample list")]
    EmptySamples,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("conservation drift {drift:.3e} exceeded the abort threshold at t = {time}")]
    IntegrationDrift { time: f64, drift: f64 },

    #[error("no convergence after {iterations} iterations (best residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("line search stalled at iteration {iteration} (projected gradient norm {grad_norm:.3e})")]
    LineSearchStall { iteration: usize, grad_norm: f64 },

    #[error("antipodal configuration: logarithm is multivalued (candidates {candidates:?})")]
    Antipodal { candidates: Vec<[f64; 3]> },

    #[error("singular endpoint map (reciprocal condition {rcond:.3e}); the horizon is degenerate")]
    SingularEndpointMap { rcond: f64 },

    #[error("segment junction mismatch at segment {index} (gap {gap:.3e})")]
    JunctionMismatch { index: usize, gap: f64 },

    #[error("pole crossing near t = {time}: split the grid at the pole")]
    PoleCrossing { time: f64 },

    #[error("longitudinal coefficient is zero; use the horizontal closed form")]
    ZeroLongitudinal,

    #[error("argument {re}+{im}i is at a lattice pole")]
    LatticePole { re: f64, im: f64 },

    #[error("shift search failed from every starting point")]
    ShiftNotFound,

    #[error("inconsistent shift: imaginary residue {residue:.3e} at t = {time}")]
    InconsistentShift { time: f64, residue: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
