//! Square 2D FFTs and Fourier-space helpers on a periodic [`Grid2`].
//!
//! Arrays are `n x n`, indexed `[i1, i2]` with `i1` the x1 index (slow axis)
//! and `i2` the x2 index (fast axis). Node `i` sits at `-L + i h`.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::fields::Grid2;

pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, data: &mut Array2<Complex64>) {
        self.apply(data, &self.forward);
    }

    /// Inverse transform, normalized so that `inverse(forward(f)) == f`.
    pub fn inverse(&self, data: &mut Array2<Complex64>) {
        self.apply(data, &self.inverse);
        let scale = 1.0 / (self.n * self.n) as f64;
        data.mapv_inplace(|z| z * scale);
    }

    pub fn forward_real(&self, values: &Array2<f64>) -> Array2<Complex64> {
        let mut data = values.mapv(|v| Complex64::new(v, 0.0));
        self.forward(&mut data);
        data
    }

    /// Inverse transform keeping the real part.
    pub fn inverse_real(&self, hat: &Array2<Complex64>) -> Array2<f64> {
        let mut data = hat.clone();
        self.inverse(&mut data);
        data.mapv(|z| z.re)
    }

    fn apply(&self, data: &mut Array2<Complex64>, fft: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.dim(), (self.n, self.n), "array does not match FFT size");
        let slice = data
            .as_slice_mut()
            .expect("FFT arrays must be in standard layout");
        fft.process(slice);
        transpose_in_place(slice, self.n);
        fft.process(slice);
        transpose_in_place(slice, self.n);
    }
}

fn transpose_in_place(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Signed integer wavenumber of FFT index `m` (Nyquist maps to `-n/2`).
pub fn signed_index(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Physical angular wavenumbers `2 pi k / (2L)` for every FFT index.
pub fn wavenumbers(grid: &Grid2) -> Vec<f64> {
    let n = grid.n();
    let base = PI / grid.half_period();
    (0..n).map(|m| signed_index(m, n) as f64 * base).collect()
}

/// Whether index `m` is the Nyquist mode.
pub fn is_nyquist(m: usize, n: usize) -> bool {
    m == n / 2
}

/// 2/3-rule mask: keeps modes with `|k| < n/3` along both axes.
pub fn dealias_mask(n: usize) -> Array2<bool> {
    let cutoff = n as i64 / 3;
    Array2::from_shape_fn((n, n), |(a, b)| {
        signed_index(a, n).abs() < cutoff && signed_index(b, n).abs() < cutoff
    })
}

/// Spectral derivative along `axis` (0 for x1, 1 for x2); Nyquist is dropped.
pub fn derivative(hat: &Array2<Complex64>, axis: usize, grid: &Grid2) -> Array2<Complex64> {
    let n = grid.n();
    let k = wavenumbers(grid);
    Array2::from_shape_fn((n, n), |(a, b)| {
        let m = if axis == 0 { a } else { b };
        if is_nyquist(m, n) {
            Complex64::new(0.0, 0.0)
        } else {
            hat[(a, b)] * Complex64::new(0.0, k[m])
        }
    })
}

/// Real spectral derivative of node values.
pub fn derivative_real(fft: &Fft2, values: &Array2<f64>, axis: usize, grid: &Grid2) -> Array2<f64> {
    let hat = fft.forward_real(values);
    fft.inverse_real(&derivative(&hat, axis, grid))
}

/// Evaluates the trigonometric interpolant of `hat` at an arbitrary point.
///
/// The Nyquist mode enters symmetrically as a cosine so that the interpolant
/// is real and reproduces node values.
pub fn interpolate(hat: &Array2<Complex64>, grid: &Grid2, x1: f64, x2: f64) -> f64 {
    let n = grid.n();
    let k = wavenumbers(grid);
    let phases = |x: f64| -> Vec<Complex64> {
        let s = x + grid.half_period();
        (0..n)
            .map(|m| {
                if is_nyquist(m, n) {
                    Complex64::new((k[m] * s).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, k[m] * s)
                }
            })
            .collect()
    };
    let e1 = phases(x1);
    let e2 = phases(x2);
    let mut total = Complex64::new(0.0, 0.0);
    for (a, row) in hat.outer_iter().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, e) in row.iter().zip(&e2) {
            acc += c * e;
        }
        total += acc * e1[a];
    }
    total.re / (n * n) as f64
}
