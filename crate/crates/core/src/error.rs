use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("kernel evaluated at a singular point ({x1}, {x2})")]
    SingularPoint { x1: f64, x2: f64 },
    #[error("window size {window} is smaller than twice the period {period}")]
    WindowTooSmall { window: f64, period: f64 },
    #[error("wavenumber {k} hits a Wood anomaly at mode {mode}")]
    WoodAnomaly { k: f64, mode: i64 },
    #[error("grids touch or cross; distinct interfaces must be separated")]
    TouchingGrids,
    #[error("unsupported geometry: {0}")]
    Geometry(String),
    #[error("matrix is numerically singular ({context}, condition estimate {estimate:.3e})")]
    Singular { context: String, estimate: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("point ({x1}, {x2}) is outside the subdomain or too close to a boundary")]
    Evaluation { x1: f64, x2: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
