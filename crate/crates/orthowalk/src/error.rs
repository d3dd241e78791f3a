use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("facet loop is not planar: deviation {deviation:.3e} exceeds tolerance {tolerance:.3e}")]
    NonPlanarLoop { deviation: f64, tolerance: f64 },

    #[error("polytope is degenerate: fewer than d+1 affinely independent vertices")]
    DegeneratePolytope,

    #[error("half-space intersection is empty")]
    EmptyCell,

    #[error("grid spacing {spacing} does not divide box side {side}")]
    NonDivisibleSpacing { spacing: f64, side: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid transverse period: {0}")]
    InvalidPeriod(String),

    #[error("field resolution too coarse: K={layers} exceeds J={resolution}")]
    ResolutionTooCoarse { resolution: u32, layers: u32 },

    #[error("gamma {0} outside (0, sqrt(2d))")]
    GammaOutOfRange(f64),

    #[error("subdomain has no interior vertices")]
    EmptyInterior,

    #[error("an interior component touches no boundary vertex")]
    DisconnectedComponent,

    #[error("solver failed to converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("vector field is not divergence-feasible: mismatch {mismatch:.3e}")]
    InfeasibleTheta { mismatch: f64 },

    #[error("vertex {0} has no neighbors")]
    IsolatedVertex(usize),

    #[error("walk truncated after {steps} steps without exiting")]
    Truncated { steps: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
