use thiserror::Error;

/// Errors raised by the geometry, estimators and experiment drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeisError {
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point is not in the vertical subgroup (off-axis component {offset:e}, tolerance {tolerance:e})")]
    NotInVerticalSubgroup { offset: f64, tolerance: f64 },

    #[error("annulus radii out of order: inner {inner} > outer {outer}")]
    AnnulusOrder { inner: f64, outer: f64 },

    #[error("empty point cloud")]
    EmptyCloud,

    #[error("IFS maps fail the separation check: centers {i} and {j} are {distance} apart, need > {required}")]
    Separation {
        i: usize,
        j: usize,
        distance: f64,
        required: f64,
    },

    #[error("too few usable scales: {usable} (need {required})")]
    TooFewScales { usable: usize, required: usize },

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error("uncovered point {point:?} at radius {radius}")]
    Uncovered { point: [f64; 3], radius: f64 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for HeisError {
    fn from(err: std::io::Error) -> Self {
        HeisError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HeisError>;
