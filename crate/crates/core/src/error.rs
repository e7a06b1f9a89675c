use crate::domains::Point;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("root finder did not converge for {family} order {order}, root #{index}")]
    RootNotConverged {
        family: &'static str,
        order: usize,
        index: usize,
    },
    #[error("requested {requested} modes exceeds the cap of {cap}")]
    TooManyModes { requested: usize, cap: usize },
    #[error("quadrature order {got} is below the required {required}")]
    QuadratureTooCoarse { got: usize, required: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid cone: {0}")]
    InvalidCone(String),
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Point),
    #[error("multiplier is singular at the zero mode (field has nonzero mean)")]
    ZeroModeSingular,
    #[error("multiplier is not finite at mode {0}")]
    NonFiniteMultiplier(usize),
    #[error("invalid norm: {0}")]
    InvalidNorm(String),
    #[error("fields live on different bases")]
    BasisMismatch,
    #[error("solution diverged at t = {time}: {reason}")]
    Diverged { time: f64, reason: String },
    #[error("forcing grid mismatch: {0}")]
    ForcingMismatch(String),
    #[error("cone is not registered on this trajectory")]
    UnregisteredCone,
    #[error("trajectory carries no boundary traces")]
    MissingTraces,
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("spectral cluster [{0}, {0}+1) is empty")]
    EmptyCluster(f64),
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
