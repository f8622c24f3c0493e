use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry mismatch: {0} vs {1}")]
    GeometryMismatch(String, String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("mode count {requested} exceeds the alias-free band {limit}")]
    TooManyModes { requested: usize, limit: usize },

    #[error("kappa = {kappa} is below the admissible threshold {kappa_min:.6}")]
    Inadmissible { kappa: f64, kappa_min: f64 },

    #[error("resolvent is singular at kappa = {kappa}; nearest eigenvalue {nearest:.6e}")]
    Singular { kappa: f64, nearest: f64 },

    #[error("operation requires {expected} geometry, got {got}")]
    WrongGeometry { expected: &'static str, got: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
