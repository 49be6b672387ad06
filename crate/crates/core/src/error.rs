use thiserror::Error;

#[derive(Debug, Error)]
pub enum FinslerError {
    #[error("derivative order cap exceeded: {0}")]
    OrderCap(String),
    #[error("point {x:?} lies outside the chart domain `{domain}`")]
    OutsideDomain { x: Vec<f64>, domain: String },
    #[error("tangent vector must be nonzero")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite evaluation at x={x:?}, y={y:?}")]
    NonFinite { x: Vec<f64>, y: Vec<f64> },
    #[error("fundamental tensor is not positive definite at x={x:?}, y={y:?}")]
    NotPositiveDefinite { x: Vec<f64>, y: Vec<f64> },
    #[error("Randers one-form too long at x={x:?}: |beta|_alpha = {norm}")]
    RandersBoundary { x: Vec<f64>, norm: f64 },
    #[error("singular matrix at x={x:?}")]
    Singular { x: Vec<f64> },
    #[error("degenerate flag: pole and transverse edge are (nearly) parallel")]
    DegenerateFlag,
    #[error("drift too strong at x={x:?}: F(-v) = {value} >= 1")]
    DriftTooStrong { x: Vec<f64>, value: f64 },
    #[error("root solve did not converge: {0}")]
    NoConvergence(String),
    #[error("indicatrix is unbounded (F not positive on some ray)")]
    UnboundedIndicatrix,
    #[error("volume density `{0}` provides no derivatives")]
    NonDifferentiableDensity(String),
    #[error("geodesic speed drifted by {drift:.3e} (relative) at t={t}")]
    SpeedDrift { t: f64, drift: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FinslerError>;
