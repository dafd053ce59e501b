use num_complex::Complex64;
use thiserror::Error;

/// Crate-wide error type. Variants correspond to the documented failure
/// modes of the numerical operations; none of them indicate a bug, they
/// signal ill-conditioned input or an exhausted budget.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("root finder did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("quadrature tolerance not met on segment (budget exhausted, est. error {estimate:.3e})")]
    ToleranceNotMet { estimate: f64 },

    #[error("Re P(z) = {re_p:.3} exceeds the overflow threshold at z = {z}")]
    Overflow { z: Complex64, re_p: f64 },

    #[error("|Q(z)| = {abs_q:.3e} below pole tolerance at z = {z}")]
    PoleAtZero { z: Complex64, abs_q: f64 },

    #[error("no certified truncation point for the ray integral (index {j})")]
    TailBoundFailure { j: usize },

    #[error("point z = {z} is inside the singularity exclusion ball around {root}")]
    AtSingularity { root: Complex64, z: Complex64 },

    #[error("adaptive step underflowed near t = {t:.6}")]
    StepCollapse { t: f64 },

    #[error("transversality certificate failed: |sin(angle)| = {measured:.3e} < {required:.3e}")]
    TransversalityLoss { measured: f64, required: f64 },

    #[error("Newton correction diverged")]
    NewtonDivergence,

    #[error("found {found} sign changes around the singularity, expected {expected}")]
    RayCountMismatch { expected: usize, found: usize },

    #[error("separatrix seeding failed for (p = {p}, k = {k})")]
    SeedFailure { p: usize, k: i64 },

    #[error("component {component} could not be labeled consistently")]
    UnresolvedComponent { component: usize },

    #[error("cut {cut} has the same component on both sides")]
    InconsistentGluing { cut: usize },

    #[error("the integral diverges at the end prevertex {z}")]
    EndpointDivergence { z: Complex64 },

    #[error("evaluation point coincides with prevertex {z}")]
    PoleAtPrevertex { z: Complex64 },

    #[error("finite prevertex collides with an end prevertex at {z}")]
    PrevertexCollision { z: Complex64 },

    #[error("accessory parameter solver stalled, best residual {residual:.3e}")]
    SolverDivergence { residual: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
