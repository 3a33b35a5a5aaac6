//! Scalar and velocity field representations.
//!
//! Fields are either analytic (closed-form closures or catalog entries) or
//! gridded on the periodic box `[-L, L)^2`. All field types are immutable
//! after construction and are shared across worker threads behind `Arc`.

mod grid;
mod interp;
mod scalar;
mod velocity;

pub use grid::Grid2;
pub(crate) use grid::wrap_into as grid_wrap;
pub use interp::{GriddedScalar, Interpolation};
pub use scalar::{
    eval_scalar, sample_to_grid, scalar_catalog, smooth_cutoff, AnalyticScalar, KnownCoefficient,
    ScalarField,
};
pub use velocity::{
    eval_velocity, grad_sup, max_singular_value, read_velocity_slice, velocity_catalog,
    write_velocity_slice, Cellular, GradBound, GriddedVelocity, LinearStrain, RigidRotation, Shear,
    VelocityField, VelocitySlice, ZeroVelocity,
};
