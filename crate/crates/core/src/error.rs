use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid is not mirror-symmetric: element {index} has no image at ({alpha:.6}, {beta:.6})")]
    GridNotSymmetric { index: usize, alpha: f64, beta: f64 },

    #[error("grid has element centers on a symmetry axis (odd row or column count)")]
    GridHasAxisElements,

    #[error("adaptive quadrature did not converge after {panels} panels (estimate {estimate:e}, error {error:e})")]
    QuadratureNotConverged {
        panels: usize,
        estimate: f64,
        error: f64,
    },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("effective channel is zero")]
    ZeroEffectiveChannel,

    #[error("layer {layer} out of range 1..={layers}")]
    LayerOutOfRange { layer: usize, layers: usize },

    #[error("reflective variant requires a single-layer surface, got {layers} layers")]
    InvalidForMultiLayer { layers: usize },

    #[error("power distribution is empty or carries no power")]
    EmptyDistribution,

    #[error("emission vector of the last layer is zero")]
    ZeroEmission,

    #[error("phase entry {index} is not unit modulus (|θ| = {modulus})")]
    NonUnitPhase { index: usize, modulus: f64 },

    #[error("amplitude bound violated: {0}")]
    BoundViolated(String),

    #[error("quaternion {quaternion} cannot close: magnitudes {magnitudes:?}")]
    PolygonInfeasible {
        quaternion: usize,
        magnitudes: [f64; 4],
    },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
