//! Multi-reflectarray microwave imaging of layered dielectric targets.
//!
//! The crate has two forward models. [`po`] is a physical-optics imager:
//! horn feeds illuminate 1-bit reflectarrays that focus on points in front
//! of a metal plate carrying a dielectric slab, and the echo is measured by
//! reciprocity. [`go`] is a fast ray model of the same system built on a
//! transmission-line reflection coefficient. [`estimator`] inverts measured
//! focus-scan signals for permittivity and thickness by grid search over
//! the ray model.

pub mod em;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod io;
pub mod go;
pub mod mesh;
pub mod po;
pub mod reflectarray;
pub mod scene;

pub use error::{Error, Result};
pub use geometry::{CVec3, Vec3};
