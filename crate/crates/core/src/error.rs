use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("target slab overlaps the background plate volume: {0}")]
    TargetOverlap(String),

    #[error("feed {index} at {position:?} lies inside the region of interest")]
    FeedInsideRoi { index: usize, position: Vec3 },

    #[error("focus {axis} = {value} mm outside region of interest [{min}, {max}] mm")]
    FocusOutsideRoi {
        axis: char,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("observer at {observer:?} coincides with source centroid {source_index} (distance {distance:e} mm)")]
    SingularKernel {
        observer: Vec3,
        source_index: usize,
        distance: f64,
    },

    #[error("facet {index} has a non-unit normal (|n| = {norm})")]
    NonUnitNormal { index: usize, norm: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("receive denominator vanishes for feed {0} (feed current orthogonal to receive polarization)")]
    ZeroDenominator(usize),

    #[error("PO order K must be at least 1, got {0}")]
    InvalidOrder(usize),

    #[error("operation requires a dielectric target in the scene")]
    MissingTarget,

    #[error("profile image is empty")]
    EmptyProfile,

    #[error("focus point count must be odd and positive, got {0}")]
    InvalidFocusCount(usize),

    #[error("calibration amplitude is zero")]
    ZeroCalibration,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
