use crate::angle::Angle;

/// Errors raised by the puzzle, tableau, moduli and renormalization machinery.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite input {what}")]
    NonFinite { what: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate fixed point: |1 - 4c| = {distance:e}")]
    DegenerateFixedPoint { distance: f64 },

    #[error("alpha fixed point is not repelling (|multiplier| = {multiplier_abs})")]
    AlphaNotRepelling { multiplier_abs: f64 },

    #[error("no ray cycle of period <= {q_max} lands at alpha")]
    NoLandingCycleFound { q_max: u32 },

    #[error("ray {angle} diverged at potential {potential:e}")]
    RayTraceDiverged { angle: Angle, potential: f64 },

    #[error("raster too coarse: {0}")]
    RasterTooCoarse(String),

    #[error("requested level {requested} exceeds available depth {available}")]
    DepthExceeded { requested: usize, available: usize },

    #[error("critical orbit escaped at step {step}")]
    CriticalOrbitEscaped { step: usize },

    #[error("orbit point {index} lies on a puzzle boundary at level {level}")]
    OnBoundary { index: usize, level: usize },

    #[error("insufficient grid width {width} for depth {depth}")]
    InsufficientDepth { depth: usize, width: usize },

    #[error("solver stalled with residual {residual:e} after {iterations} iterations")]
    SolverDiverged { residual: f64, iterations: usize },

    #[error("propagation conflict at ({row}, {col}): {first} vs {second}")]
    PropagationConflict {
        row: usize,
        col: usize,
        first: String,
        second: String,
    },

    #[error("moduli unknown for vertices {0:?}")]
    UnknownModulus(Vec<usize>),

    #[error("no returns of the critical orbit to the level-{level} critical piece")]
    NoReturns { level: usize },

    #[error("annulus between levels {} and {level} is degenerate", level.saturating_sub(1))]
    AnnulusDegenerate { level: usize },

    #[error("first-return map validation failed: {0}")]
    ValidationFailed(crate::renorm::Violation),
}

impl Error {
    /// Stable identifier used by the command-line front end.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NonFinite { .. } => "NonFinite",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::DegenerateFixedPoint { .. } => "DegenerateFixedPoint",
            Error::AlphaNotRepelling { .. } => "AlphaNotRepelling",
            Error::NoLandingCycleFound { .. } => "NoLandingCycleFound",
            Error::RayTraceDiverged { .. } => "RayTraceDiverged",
            Error::RasterTooCoarse(_) => "RasterTooCoarse",
            Error::DepthExceeded { .. } => "DepthExceeded",
            Error::CriticalOrbitEscaped { .. } => "CriticalOrbitEscaped",
            Error::OnBoundary { .. } => "OnBoundary",
            Error::InsufficientDepth { .. } => "InsufficientDepth",
            Error::SolverDiverged { .. } => "SolverDiverged",
            Error::PropagationConflict { .. } => "PropagationConflict",
            Error::UnknownModulus(_) => "UnknownModulus",
            Error::NoReturns { .. } => "NoReturns",
            Error::AnnulusDegenerate { .. } => "AnnulusDegenerate",
            Error::ValidationFailed(_) => "ValidationFailed",
        }
    }

    /// True for failures of a numerical scheme, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SolverDiverged { .. } | Error::RayTraceDiverged { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
