//! Leading-order Bloch-wave dispersion for acoustic waves in periodic media
//! with small inclusions.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the type
//! aliases at the crate root fix `f64` for everyday use.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bem;
pub mod cluster;
pub mod dispersion;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod scalar;
pub mod specfun;
pub mod vec3;

pub use error::{Error, Result};

/// Crate version, recorded in output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use scalar::Real;
pub use vec3::Vec3;

pub type Vector = vec3::Vec3<f64>;
pub type Lattice = lattice::LatticeSpec<f64>;
pub type Exceptional = lattice::ExceptionalSet<f64>;
pub type Mesh = bem::SurfaceMesh<f64>;
pub type Polarizability = bem::PolarizabilityTensor<f64>;
pub type Density = bem::ReducedDensity<f64>;
pub type Ball = specfun::BallConstants<f64>;
pub type Medium = dispersion::MediumParams<f64>;
pub type Geometry = dispersion::GeometryScale<f64>;
pub type Modes = dispersion::EigenModes<f64>;
pub type Dispersion = dispersion::DispersionResult<f64>;
pub type Cluster = cluster::ClusterSolution<f64>;
