//! spraylab: a numerical laboratory for spray geometry on discretized
//! Frechet spaces.
//!
//! The crate estimates adjacent and second-order adjacent tangent cones of
//! closed sets by shrinking limit quotients, integrates geodesics of sprays
//! on the same discretizations, and verdicts set invariance, total geodesy,
//! geodesic convexity, and related criteria. Every worked configuration from
//! the example registry is reproducible as an automated check.

pub mod cone;
pub mod config;
pub mod error;
pub mod invariance;
pub mod oracle;
pub mod registry;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod space;
pub mod spray;

pub use error::{Error, Result};
pub use space::{ModelSpace, Point, Vector};
