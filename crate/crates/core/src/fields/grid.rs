use serde::{Deserialize, Serialize};

use crate::{Error, Point, Result};

/// Uniform periodic grid on `[-L, L)^2` with `n` cells per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    n: usize,
    half_period: f64,
}

impl Grid2 {
    pub fn new(n: usize, half_period: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two and at least 16"
            )));
        }
        if !(half_period > 0.0 && half_period.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half period L = {half_period} must be positive"
            )));
        }
        Ok(Self { n, half_period })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    pub fn period(&self) -> f64 {
        2.0 * self.half_period
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_period / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_period + i as f64 * self.spacing()
    }

    pub fn node(&self, i1: usize, i2: usize) -> Point {
        Point::new(self.coord(i1), self.coord(i2))
    }

    /// Index of the node at the origin.
    pub fn origin_index(&self) -> usize {
        self.n / 2
    }

    /// Index of the node mirrored through the origin along one axis.
    pub fn mirror_index(&self, i: usize) -> usize {
        (self.n - i) % self.n
    }

    pub fn wrap_coord(&self, x: f64) -> f64 {
        wrap_into(x, self.half_period)
    }

    pub fn wrap(&self, p: &Point) -> Point {
        Point::new(self.wrap_coord(p.x), self.wrap_coord(p.y))
    }

    /// Minimal-image representative of a displacement.
    pub fn min_image(&self, d: &Point) -> Point {
        self.wrap(d)
    }

    /// Fractional cell coordinates of `x` along one axis: `(cell, offset in [0,1))`.
    pub(crate) fn locate(&self, x: f64) -> (usize, f64) {
        let s = (self.wrap_coord(x) + self.half_period) / self.spacing();
        let cell = s.floor();
        let offset = s - cell;
        ((cell as usize) % self.n, offset)
    }
}

/// Maps `x` into `[-l, l)` modulo `2l`.
pub(crate) fn wrap_into(x: f64, l: f64) -> f64 {
    let p = 2.0 * l;
    let w = x - p * ((x + l) / p).floor();
    if w >= l {
        w - p
    } else {
        w
    }
}
