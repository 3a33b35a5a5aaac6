//! Numerical laboratory for pointwise modulus-of-continuity coefficients.
//!
//! The crate measures Hölder and log-Hölder coefficients of scalar fields at
//! a point, transports them along particle trajectories of prescribed or
//! self-consistent (2D Euler) velocity fields, and checks the resulting
//! preservation, sandwich and bi-Lipschitz statements numerically.
//!
//! Interchangeable pieces (velocity fields, initial data, samplers and
//! experiment kinds) sit behind traits and are looked up by name in a
//! [`registry::Catalog`], so that a TOML config selects them at runtime.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod euler2d;
pub mod fields;
pub mod flow;
pub mod harness;
pub mod modcont;
pub mod registry;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};

/// A point (or vector) in the plane.
pub type Point = nalgebra::Vector2<f64>;

/// A 2x2 velocity gradient, `m[(i, j)] = d u_i / d x_j`.
pub type Jacobian = nalgebra::Matrix2<f64>;

/// Crate version recorded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
