//! Modulus-of-continuity families and pointwise coefficient estimation.
//!
//! For a modulus `delta` the pointwise coefficient of `f` at `x0` is
//! `lim_{r -> 0} sup_{x in B_r(x0)} |f(x) - f(x0)| / delta(|x - x0|)`.
//! The sup is monotone in `r`, so the limit is estimated from a geometric
//! ladder of radii: [`coefficient_profile`] computes the sampled sup on each
//! ball and [`estimate_coefficient`] reads off the smallest-radius value with
//! a plateau diagnostic.

mod family;
mod profile;
mod sampler;

pub use family::{modulus_value, sandwich_bounds, ModulusFamily, S_MAX};
pub use profile::{
    coefficient_profile, estimate_coefficient, geometric_radii, CoefficientEstimate,
    CoefficientProfile, Convergence,
};
pub use sampler::{sampler_catalog, DirectionSweep, GridSampler, Sampler};

pub(crate) use profile::least_squares_slope;
