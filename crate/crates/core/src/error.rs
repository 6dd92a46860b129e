use thiserror::Error;

/// Everything that can go wrong across the kinematic chain, the learning
/// stack and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("tip z = {z} mm is outside the model domain (z must be > 0)")]
    NonPositiveZ { z: f64 },

    #[error("chamber {chamber} length {length} mm is not positive")]
    NonPositiveLength { chamber: usize, length: f64 },

    #[error("degenerate geometry: chamber offset d = {d} must be > 0")]
    DegenerateGeometry { d: f64 },

    #[error("bending radius is infinite (equal chamber lengths)")]
    InfiniteRadius,

    #[error("pressure {pressure_kpa} kPa has no length root in the bracket [{lo}, {hi}] mm")]
    BracketFailure { pressure_kpa: f64, lo: f64, hi: f64 },

    #[error("insufficient data: got {got} samples, need at least {need}")]
    InsufficientData { got: usize, need: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("chamber {chamber} requires {pressure_kpa:.3} kPa, outside [0, {p_max}] kPa")]
    Unreachable { chamber: usize, pressure_kpa: f64, p_max: f64 },

    #[error("waypoint {index} is unreachable: {source}")]
    UnreachableWaypoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid value for `{path}`: {message}")]
    Invalid { path: String, message: String },

    #[error("feature {feature} has zero variance")]
    DegenerateFeature { feature: usize },

    #[error("training loss became non-finite at epoch {epoch}")]
    DivergedLoss { epoch: usize },

    #[error("no target component has magnitude >= {threshold} kPa")]
    NoEligibleComponents { threshold: f64 },

    #[error("targets are constant, R² is undefined")]
    ConstantTargets,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("level {level} kPa is not on the pressure grid")]
    UnknownLevel { level: f64 },

    #[error("unsupported model format version {0}")]
    FormatVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical pipeline (divergence, unreachable
    /// targets, unsolvable pressures) as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DivergedLoss { .. }
                | Error::Unreachable { .. }
                | Error::UnreachableWaypoint { .. }
                | Error::BracketFailure { .. }
                | Error::NonPositiveLength { .. }
                | Error::NonPositiveZ { .. }
                | Error::InfiniteRadius
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
