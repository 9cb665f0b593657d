//! Super-resolution by fusing banks of internal (self-similarity) and
//! external (coupled-dictionary) preliminary estimates through a low-rank +
//! sparse decomposition.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar for common use.

pub mod bank;
pub mod container;
pub mod error;
pub mod external;
pub mod fusion;
pub mod imaging;
pub mod internal;
pub mod linalg;
pub mod metrics;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Image = imaging::ImagePlane<f64>;
pub type Image32 = imaging::ImagePlane<f32>;
pub type Color = imaging::ColorImage<f64>;
