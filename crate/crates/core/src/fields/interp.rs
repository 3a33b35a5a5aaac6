use ndarray::Array2;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Grid2, KnownCoefficient, ScalarField};
use crate::error::finite;
use crate::spectral::{self, Fft2};
use crate::{Error, Point, Result};

/// How a gridded field is evaluated between nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Cubic Hermite in each axis, node slopes from 4th-order central differences.
    #[default]
    Bicubic,
    /// Full trigonometric interpolant; `O(n^2)` per evaluation.
    Spectral,
}

#[derive(Clone, Debug)]
enum Interpolant {
    Hermite {
        dx: Array2<f64>,
        dy: Array2<f64>,
        dxy: Array2<f64>,
    },
    Spectral(Array2<Complex64>),
}

/// Node values on a [`Grid2`] plus an interpolant.
#[derive(Clone, Debug)]
pub struct GriddedScalar {
    grid: Grid2,
    values: Array2<f64>,
    interpolant: Interpolant,
    known: Option<KnownCoefficient>,
    label: String,
}

impl GriddedScalar {
    pub fn new(grid: Grid2, values: Array2<f64>, mode: Interpolation) -> Result<Self> {
        let n = grid.n();
        if values.dim() != (n, n) {
            return Err(Error::InvalidGrid(format!(
                "values have shape {:?}, grid is {n}x{n}",
                values.dim()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gridded field values".into()));
        }
        let values = values.as_standard_layout().to_owned();
        let interpolant = match mode {
            Interpolation::Bicubic => {
                let h = grid.spacing();
                let dx = central_difference(&values, 0, h);
                let dy = central_difference(&values, 1, h);
                let dxy = central_difference(&dx, 1, h);
                Interpolant::Hermite { dx, dy, dxy }
            }
            Interpolation::Spectral => {
                Interpolant::Spectral(Fft2::new(n).forward_real(&values))
            }
        };
        Ok(Self {
            grid,
            values,
            interpolant,
            known: None,
            label: "gridded".into(),
        })
    }

    pub fn with_known(mut self, known: Option<KnownCoefficient>) -> Self {
        self.known = known;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn mode(&self) -> Interpolation {
        match self.interpolant {
            Interpolant::Hermite { .. } => Interpolation::Bicubic,
            Interpolant::Spectral(_) => Interpolation::Spectral,
        }
    }

    pub fn interpolate(&self, x: &Point) -> f64 {
        match &self.interpolant {
            Interpolant::Spectral(hat) => spectral::interpolate(hat, &self.grid, x.x, x.y),
            Interpolant::Hermite { dx, dy, dxy } => {
                let n = self.grid.n();
                let h = self.grid.spacing();
                let (i, u) = self.grid.locate(x.x);
                let (j, v) = self.grid.locate(x.y);
                let ip = (i + 1) % n;
                let jp = (j + 1) % n;
                let bu = hermite_basis(u);
                let bv = hermite_basis(v);
                let corners = [(i, j, 0, 0), (ip, j, 1, 0), (i, jp, 0, 1), (ip, jp, 1, 1)];
                let mut total = 0.0;
                for (a, b, ca, cb) in corners {
                    let (f0u, f1u) = bu[ca];
                    let (f0v, f1v) = bv[cb];
                    total += f0u * f0v * self.values[(a, b)]
                        + f1u * f0v * dx[(a, b)] * h
                        + f0u * f1v * dy[(a, b)] * h
                        + f1u * f1v * dxy[(a, b)] * h * h;
                }
                total
            }
        }
    }
}

/// Hermite basis at offset `t`: for the left and right node, (value weight, slope weight).
fn hermite_basis(t: f64) -> [(f64, f64); 2] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        (2.0 * t3 - 3.0 * t2 + 1.0, t3 - 2.0 * t2 + t),
        (-2.0 * t3 + 3.0 * t2, t3 - t2),
    ]
}

/// Periodic 4th-order central difference along `axis`.
fn central_difference(values: &Array2<f64>, axis: usize, h: f64) -> Array2<f64> {
    let n = values.nrows();
    let at = |a: usize, b: usize, off: isize| -> f64 {
        let shift = |i: usize| ((i as isize + off).rem_euclid(n as isize)) as usize;
        if axis == 0 {
            values[(shift(a), b)]
        } else {
            values[(a, shift(b))]
        }
    };
    Array2::from_shape_fn((n, n), |(a, b)| {
        (at(a, b, -2) - 8.0 * at(a, b, -1) + 8.0 * at(a, b, 1) - at(a, b, 2)) / (12.0 * h)
    })
}

impl ScalarField for GriddedScalar {
    fn eval(&self, x: &Point) -> Result<f64> {
        finite(self.interpolate(x), "gridded interpolation")
    }

    fn known_coefficient(&self) -> Option<&KnownCoefficient> {
        self.known.as_ref()
    }

    fn grid(&self) -> Option<&Grid2> {
        Some(&self.grid)
    }

    fn node_values(&self) -> Option<&Array2<f64>> {
        Some(&self.values)
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sampled(n: usize, mode: Interpolation, f: impl Fn(f64, f64) -> f64) -> GriddedScalar {
        let g = Grid2::new(n, PI).unwrap();
        let values = Array2::from_shape_fn((n, n), |(a, b)| f(g.coord(a), g.coord(b)));
        GriddedScalar::new(g, values, mode).unwrap()
    }

    #[test]
    fn sin_cos_bicubic_within_1e8() {
        let f = |x: f64, y: f64| x.sin() * y.cos();
        let s = sampled(256, Interpolation::Bicubic, f);
        let x = Point::new(0.123, 0.456);
        let err = (s.eval(&x).unwrap() - f(0.123, 0.456)).abs();
        assert!(err < 1e-8, "error {err:e}");
    }

    #[test]
    fn spectral_mode_is_exact_for_band_limited() {
        let f = |x: f64, y: f64| x.sin() * y.cos();
        let s = sampled(32, Interpolation::Spectral, f);
        assert!((s.eval(&Point::new(0.123, 0.456)).unwrap() - f(0.123, 0.456)).abs() < 1e-13);
    }

    #[test]
    fn reproduces_nodes_and_is_periodic() {
        for mode in [Interpolation::Bicubic, Interpolation::Spectral] {
            let s = sampled(16, mode, |x, y| (x * 1.7).cos() + (y - x).sin().powi(3));
            let g = *s.grid().unwrap();
            for (a, b) in [(0, 0), (3, 9), (15, 15), (8, 8)] {
                let v = s.eval(&g.node(a, b)).unwrap();
                assert!((v - s.values()[(a, b)]).abs() < 1e-12, "{mode:?}");
            }
            let x = Point::new(0.77, -2.1);
            let shifted = x + Point::new(2.0 * PI, 0.0);
            assert!((s.eval(&x).unwrap() - s.eval(&shifted).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let g = Grid2::new(16, 1.0).unwrap();
        let mut v = Array2::zeros((16, 16));
        v[(2, 2)] = f64::NAN;
        assert!(GriddedScalar::new(g, v, Interpolation::Bicubic).is_err());
    }
}
