//! Pseudo-spectral solver for the 2D Euler equations in vorticity form,
//!
//! ```text
//! omega_t + u . grad omega = 0,   u = grad^perp Delta^{-1} omega,   grad^perp = (-d2, d1),
//! ```
//!
//! on the periodic box `[-L, L)^2`, so that `d1 u2 - d2 u1 = omega`.
//! Time stepping is classical RK4 on the Fourier coefficients with the 2/3
//! rule applied to the advection product. Odd-odd states (odd in `x1` and in
//! `x2`) keep the origin as a hyperbolic stagnation point.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, Zip};
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::fields::{
    smooth_cutoff, Grid2, GriddedScalar, Interpolation, ScalarField, VelocitySlice,
};
use crate::modcont::{
    coefficient_profile, estimate_coefficient, CoefficientEstimate, CoefficientProfile,
    DirectionSweep, ModulusFamily, Sampler,
};
use crate::spectral::{dealias_mask, interpolate, is_nyquist, wavenumbers, Fft2};
use crate::{Error, Point, Result};

/// Kernel constant of the origin-strain integral.
pub const ORIGIN_STRAIN_C0: f64 = 4.0 / PI;

/// Largest admissible `dt * max|u| / h`.
pub const CFL_LIMIT: f64 = 0.5;

const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SymmetryTag {
    pub odd_odd: bool,
}

impl SymmetryTag {
    pub const NONE: SymmetryTag = SymmetryTag { odd_odd: false };
    pub const ODD_ODD: SymmetryTag = SymmetryTag { odd_odd: true };
}

/// Vorticity on the nodes of a periodic grid, with its Fourier coefficients.
#[derive(Clone, Debug)]
pub struct EulerState {
    grid: Grid2,
    omega: Array2<f64>,
    hat: Array2<Complex64>,
    t: f64,
    symmetry: SymmetryTag,
}

impl EulerState {
    /// Validates finiteness, zero mean and (if tagged) odd-odd symmetry.
    pub fn new(grid: Grid2, omega: Array2<f64>, t: f64, symmetry: SymmetryTag) -> Result<Self> {
        let n = grid.n();
        if omega.dim() != (n, n) {
            return Err(Error::InvalidGrid(format!(
                "vorticity array {:?} does not match n = {n}",
                omega.dim()
            )));
        }
        if omega.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vorticity".into()));
        }
        let scale = omega.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mean = omega.mean().unwrap_or(0.0);
        if mean.abs() > 1e-12 * scale {
            return Err(Error::NonZeroMean(mean));
        }
        let defect = symmetry_defect(&grid, &omega);
        if symmetry.odd_odd && defect > SYMMETRY_TOL * scale {
            return Err(Error::param(
                "symmetry",
                format!("state tagged odd_odd but the symmetry defect is {defect:e}"),
            ));
        }
        let hat = Fft2::new(n).forward_real(&omega);
        Ok(Self {
            grid,
            omega,
            hat,
            t,
            symmetry,
        })
    }

    pub fn zero(grid: Grid2, symmetry: SymmetryTag) -> Self {
        let n = grid.n();
        Self {
            grid,
            omega: Array2::zeros((n, n)),
            hat: Array2::zeros((n, n)),
            t: 0.0,
            symmetry,
        }
    }

    /// Samples `f` at the nodes. With `odd_odd`, only the quadrant `x1, x2 > 0`
    /// is evaluated and the rest is filled by reflection, so the symmetry is exact.
    pub fn from_fn(
        grid: Grid2,
        symmetry: SymmetryTag,
        f: impl Fn(&Point) -> f64,
    ) -> Result<Self> {
        let n = grid.n();
        let omega = if symmetry.odd_odd {
            let o = grid.origin_index();
            let mut w = Array2::zeros((n, n));
            for a in (o + 1)..n {
                for b in (o + 1)..n {
                    let v = f(&grid.node(a, b));
                    let (ma, mb) = (grid.mirror_index(a), grid.mirror_index(b));
                    w[(a, b)] = v;
                    w[(ma, b)] = -v;
                    w[(a, mb)] = -v;
                    w[(ma, mb)] = v;
                }
            }
            w
        } else {
            let mut w = Array2::from_shape_fn((n, n), |(a, b)| f(&grid.node(a, b)));
            let mean = w.mean().unwrap_or(0.0);
            w.mapv_inplace(|v| v - mean);
            w
        };
        Self::new(grid, omega, 0.0, symmetry)
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn omega(&self) -> &Array2<f64> {
        &self.omega
    }

    pub fn hat(&self) -> &Array2<Complex64> {
        &self.hat
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn symmetry(&self) -> SymmetryTag {
        self.symmetry
    }

    pub fn mean(&self) -> f64 {
        self.omega.mean().unwrap_or(0.0)
    }

    pub fn l2_norm(&self) -> f64 {
        let h2 = self.grid.spacing().powi(2);
        (self.omega.iter().map(|v| v * v).sum::<f64>() * h2).sqrt()
    }

    pub fn l4_norm(&self) -> f64 {
        let h2 = self.grid.spacing().powi(2);
        (self.omega.iter().map(|v| v.powi(4)).sum::<f64>() * h2).powf(0.25)
    }

    pub fn max_abs(&self) -> f64 {
        self.omega.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Node value at the origin.
    pub fn origin_value(&self) -> f64 {
        let o = self.grid.origin_index();
        self.omega[(o, o)]
    }

    /// Largest `|omega(x) + omega(R x)|` over nodes, for both axis reflections `R`.
    pub fn symmetry_defect(&self) -> f64 {
        symmetry_defect(&self.grid, &self.omega)
    }

    /// Interpolated vorticity as a scalar field.
    pub fn scalar(&self, mode: Interpolation) -> Result<GriddedScalar> {
        Ok(GriddedScalar::new(self.grid, self.omega.clone(), mode)?
            .with_label(format!("omega(t={})", self.t)))
    }

    /// `x1,x2,omega` rows; limited to `n <= 256`.
    pub fn to_csv(&self) -> Result<String> {
        let n = self.grid.n();
        if n > 256 {
            return Err(Error::param("n", "CSV export is limited to n <= 256"));
        }
        let mut s = String::from("x1,x2,omega\n");
        for ((a, b), v) in self.omega.indexed_iter() {
            let p = self.grid.node(a, b);
            s.push_str(&format!("{},{},{}\n", p.x, p.y, v));
        }
        Ok(s)
    }
}

fn symmetry_defect(grid: &Grid2, w: &Array2<f64>) -> f64 {
    let mut worst = 0.0f64;
    for ((a, b), v) in w.indexed_iter() {
        let r1 = w[(grid.mirror_index(a), b)];
        let r2 = w[(a, grid.mirror_index(b))];
        worst = worst.max((v + r1).abs()).max((v + r2).abs());
    }
    worst
}

fn project_odd_odd(grid: &Grid2, w: &Array2<f64>) -> Array2<f64> {
    Array2::from_shape_fn(w.dim(), |(a, b)| {
        let (ma, mb) = (grid.mirror_index(a), grid.mirror_index(b));
        0.25 * ((w[(a, b)] - w[(ma, b)]) - (w[(a, mb)] - w[(ma, mb)]))
    })
}

/// `2 x1 x2 / (4 x1^2 + x2^2) |x|^beta` for `|x| <= 1`, smoothly cut off to
/// zero on `1 <= |x| <= 1.5`.
pub fn bahouri_chemin_profile(x: &Point, beta: f64) -> f64 {
    let r = x.norm();
    if r == 0.0 || r >= 1.5 {
        return 0.0;
    }
    2.0 * x.x * x.y / (4.0 * x.x * x.x + x.y * x.y) * r.powf(beta) * smooth_cutoff(r, 1.0, 1.5)
}

/// Odd-odd initial vorticity with a Holder cusp at the origin.
pub fn bahouri_chemin_init(beta: f64, grid: Grid2) -> Result<EulerState> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::param("beta", "holder requires 0 < β ≤ 1"));
    }
    if grid.half_period() < 2.0 {
        return Err(Error::InvalidGrid(format!(
            "half-period {} is below 2; the support of radius 1.5 would wrap",
            grid.half_period()
        )));
    }
    EulerState::from_fn(grid, SymmetryTag::ODD_ODD, |x| bahouri_chemin_profile(x, beta))
}

/// Fourier multipliers shared by the velocity and advection computations.
struct Multipliers {
    /// `i k2 / |k|^2` and `-i k1 / |k|^2`, giving `u1`, `u2` from `omega`.
    bs: [Array2<Complex64>; 2],
    /// `i k1`, `i k2` (Nyquist dropped).
    grad: [Array2<Complex64>; 2],
    mask: Array2<f64>,
}

impl Multipliers {
    fn new(grid: &Grid2) -> Self {
        let n = grid.n();
        let k = wavenumbers(grid);
        let ik = |m: usize| {
            if is_nyquist(m, n) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k[m])
            }
        };
        let inv_k2 = |a: usize, b: usize| {
            let k2 = k[a] * k[a] + k[b] * k[b];
            if k2 == 0.0 {
                0.0
            } else {
                1.0 / k2
            }
        };
        let bs1 = Array2::from_shape_fn((n, n), |(a, b)| ik(b) * inv_k2(a, b));
        let bs2 = Array2::from_shape_fn((n, n), |(a, b)| -ik(a) * inv_k2(a, b));
        let g1 = Array2::from_shape_fn((n, n), |(a, _)| ik(a));
        let g2 = Array2::from_shape_fn((n, n), |(_, b)| ik(b));
        let mask = dealias_mask(n).mapv(|keep| if keep { 1.0 } else { 0.0 });
        Self {
            bs: [bs1, bs2],
            grad: [g1, g2],
            mask,
        }
    }
}

fn times(m: &Array2<Complex64>, h: &Array2<Complex64>) -> Array2<Complex64> {
    let mut out = h.clone();
    Zip::from(&mut out).and(m).for_each(|o, &k| *o *= k);
    out
}

/// Real fields `a, b` from their (Hermitian) coefficients with one inverse FFT.
fn inverse_pair(fft: &Fft2, a: &Array2<Complex64>, b: &Array2<Complex64>) -> (Array2<f64>, Array2<f64>) {
    let i = Complex64::new(0.0, 1.0);
    let mut packed = a.clone();
    Zip::from(&mut packed).and(b).for_each(|p, &q| *p += i * q);
    fft.inverse(&mut packed);
    (packed.mapv(|z| z.re), packed.mapv(|z| z.im))
}

/// Velocity slice `u = grad^perp Delta^{-1} omega` of a mean-zero state.
pub fn biot_savart(s: &EulerState) -> Result<VelocitySlice> {
    let scale = s.max_abs().max(1.0);
    if s.mean().abs() > 1e-12 * scale {
        return Err(Error::NonZeroMean(s.mean()));
    }
    let m = Multipliers::new(&s.grid);
    let fft = Fft2::new(s.grid.n());
    let (u1, u2) = inverse_pair(&fft, &times(&m.bs[0], &s.hat), &times(&m.bs[1], &s.hat));
    VelocitySlice::from_nodes(s.grid, s.t, u1, u2)
}

/// Biot-Savart velocity of raw node values; rejects a non-zero mean.
pub fn biot_savart_nodes(grid: Grid2, omega: Array2<f64>) -> Result<VelocitySlice> {
    biot_savart(&EulerState::new(grid, omega, 0.0, SymmetryTag::NONE)?)
}

/// RK4 stepper with precomputed FFT plans and multipliers for one grid.
pub struct EulerSolver {
    grid: Grid2,
    fft: Fft2,
    mult: Multipliers,
    project_symmetry: bool,
}

impl EulerSolver {
    pub fn new(grid: Grid2) -> Self {
        Self {
            grid,
            fft: Fft2::new(grid.n()),
            mult: Multipliers::new(&grid),
            project_symmetry: true,
        }
    }

    /// Whether odd-odd states are re-symmetrized on the nodes after each step.
    pub fn with_symmetry_projection(mut self, on: bool) -> Self {
        self.project_symmetry = on;
        self
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    /// Largest node speed of the state's velocity.
    pub fn max_speed(&self, s: &EulerState) -> f64 {
        let (u1, u2) = inverse_pair(
            &self.fft,
            &times(&self.mult.bs[0], &s.hat),
            &times(&self.mult.bs[1], &s.hat),
        );
        Zip::from(&u1)
            .and(&u2)
            .fold(0.0f64, |m, a, b| m.max((a * a + b * b).sqrt()))
    }

    /// `dt * max|u| / h` for the current state.
    pub fn cfl(&self, s: &EulerState, dt: f64) -> f64 {
        dt * self.max_speed(s) / self.grid.spacing()
    }

    /// `-(u . grad omega)^hat` with the 2/3 rule on both factors and the product.
    fn rhs(&self, hat: &Array2<Complex64>) -> Array2<Complex64> {
        let m = &self.mult;
        let mut wd = hat.clone();
        Zip::from(&mut wd).and(&m.mask).for_each(|w, &k| *w *= k);
        let (u1, u2) = inverse_pair(&self.fft, &times(&m.bs[0], &wd), &times(&m.bs[1], &wd));
        let (w1, w2) = inverse_pair(&self.fft, &times(&m.grad[0], &wd), &times(&m.grad[1], &wd));
        let mut prod = Array2::<Complex64>::zeros(hat.dim());
        Zip::from(&mut prod)
            .and(&u1)
            .and(&u2)
            .and(&w1)
            .and(&w2)
            .for_each(|p, &a, &b, &c, &d| *p = Complex64::new(-(a * c + b * d), 0.0));
        self.fft.forward(&mut prod);
        Zip::from(&mut prod).and(&m.mask).for_each(|p, &k| *p *= k);
        prod
    }

    fn tracer_velocity(&self, hat: &Array2<Complex64>, x: &Point) -> Point {
        let g = &self.grid;
        let u1 = times(&self.mult.bs[0], hat);
        let u2 = times(&self.mult.bs[1], hat);
        Point::new(interpolate(&u1, g, x.x, x.y), interpolate(&u2, g, x.x, x.y))
    }

    fn tracer_velocities(&self, hat: &Array2<Complex64>, xs: &[Point]) -> Vec<Point> {
        if xs.is_empty() {
            return Vec::new();
        }
        let g = &self.grid;
        let u1 = times(&self.mult.bs[0], hat);
        let u2 = times(&self.mult.bs[1], hat);
        xs.iter()
            .map(|x| Point::new(interpolate(&u1, g, x.x, x.y), interpolate(&u2, g, x.x, x.y)))
            .collect()
    }

    /// Velocity of the state at an arbitrary point (trigonometric interpolant).
    pub fn velocity_at(&self, s: &EulerState, x: &Point) -> Point {
        self.tracer_velocity(&s.hat, x)
    }

    pub fn step(&self, s: &EulerState, dt: f64) -> Result<EulerState> {
        self.step_with_tracers(s, dt, &mut [])
    }

    /// One RK4 step; `tracers` are advected by the same stages.
    pub fn step_with_tracers(
        &self,
        s: &EulerState,
        dt: f64,
        tracers: &mut [Point],
    ) -> Result<EulerState> {
        if s.grid != self.grid {
            return Err(Error::InvalidGrid("state grid differs from solver grid".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        let cfl = self.cfl(s, dt);
        if cfl > CFL_LIMIT {
            return Err(Error::Cfl {
                cfl,
                limit: CFL_LIMIT,
            });
        }
        let axpy = |a: &Array2<Complex64>, c: f64, b: &Array2<Complex64>| {
            let mut out = a.clone();
            Zip::from(&mut out).and(b).for_each(|o, &v| *o += v * c);
            out
        };
        let shift = |xs: &[Point], c: f64, v: &[Point]| -> Vec<Point> {
            xs.iter().zip(v).map(|(x, v)| x + v * c).collect()
        };
        let x0 = tracers.to_vec();

        let k1 = self.rhs(&s.hat);
        let v1 = self.tracer_velocities(&s.hat, &x0);
        let h2 = axpy(&s.hat, dt / 2.0, &k1);
        let k2 = self.rhs(&h2);
        let v2 = self.tracer_velocities(&h2, &shift(&x0, dt / 2.0, &v1));
        let h3 = axpy(&s.hat, dt / 2.0, &k2);
        let k3 = self.rhs(&h3);
        let v3 = self.tracer_velocities(&h3, &shift(&x0, dt / 2.0, &v2));
        let h4 = axpy(&s.hat, dt, &k3);
        let k4 = self.rhs(&h4);
        let v4 = self.tracer_velocities(&h4, &shift(&x0, dt, &v3));

        let mut hat = s.hat.clone();
        Zip::from(&mut hat)
            .and(&k1)
            .and(&k2)
            .and(&k3)
            .and(&k4)
            .for_each(|h, &a, &b, &c, &d| *h += (a + b * 2.0 + c * 2.0 + d) * (dt / 6.0));
        for (i, x) in tracers.iter_mut().enumerate() {
            *x = self
                .grid
                .wrap(&(x0[i] + (v1[i] + v2[i] * 2.0 + v3[i] * 2.0 + v4[i]) * (dt / 6.0)));
        }

        let mut omega = self.fft.inverse_real(&hat);
        if s.symmetry.odd_odd && self.project_symmetry {
            omega = project_odd_odd(&self.grid, &omega);
            hat = self.fft.forward_real(&omega);
        }
        if omega.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vorticity after step".into()));
        }
        Ok(EulerState {
            grid: self.grid,
            omega,
            hat,
            t: s.t + dt,
            symmetry: s.symmetry,
        })
    }
}

/// Convenience single step with a fresh solver.
pub fn step(s: &EulerState, dt: f64) -> Result<EulerState> {
    EulerSolver::new(s.grid).step(s, dt)
}

/// `c0 * sum_{y1, y2 > 0, |y| >= inner} y1 y2 / |y|^4 omega(y) h^2` over grid nodes.
pub fn origin_strain_diagnostic(s: &EulerState, inner_cutoff: f64) -> Result<f64> {
    if !s.symmetry.odd_odd {
        return Err(Error::MissingSymmetry);
    }
    let h = s.grid.spacing();
    if inner_cutoff < 2.0 * h {
        return Err(Error::BelowResolution {
            radius: inner_cutoff,
            limit: 2.0 * h,
        });
    }
    let o = s.grid.origin_index();
    let n = s.grid.n();
    let mut sum = 0.0;
    for a in (o + 1)..n {
        for b in (o + 1)..n {
            let y = s.grid.node(a, b);
            let r2 = y.norm_squared();
            if r2 >= inner_cutoff * inner_cutoff {
                sum += y.x * y.y / (r2 * r2) * s.omega[(a, b)];
            }
        }
    }
    Ok(ORIGIN_STRAIN_C0 * sum * h * h)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; m];
    let mut ws = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if m == 0 { 1.0 } else { p1 };
            dp = m as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = -x;
        xs[m - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        ws[i] = w;
        ws[m - 1 - i] = w;
    }
    (xs, ws)
}

/// Polar quadrature of the origin-strain integral for a field given pointwise:
/// Gauss-Legendre in `ln r` on `[inner, outer]` and in angle on `[0, pi/2]`.
pub fn origin_strain_quadrature(
    f: &dyn ScalarField,
    inner_cutoff: f64,
    outer: f64,
    panels: usize,
) -> Result<f64> {
    if !(inner_cutoff > 0.0 && outer > inner_cutoff) {
        return Err(Error::param("inner_cutoff", "need 0 < inner < outer"));
    }
    let (gx, gw) = gauss_legendre(16);
    let (a0, a1) = (inner_cutoff.ln(), outer.ln());
    let panels = panels.max(1);
    let width = (a1 - a0) / panels as f64;
    let half_angle = PI / 4.0;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a0 + (p as f64 + 0.5) * width;
        for (x, w) in gx.iter().zip(&gw) {
            let r = (mid + 0.5 * width * x).exp();
            let mut ang = 0.0;
            for (y, v) in gx.iter().zip(&gw) {
                let phi = half_angle * (1.0 + y);
                let (s, c) = phi.sin_cos();
                ang += v * s * c * f.eval(&Point::new(r * c, r * s))?;
            }
            // y1 y2 / |y|^4 * r dr dphi = sin cos / r^2 * r * (r d ln r) dphi
            total += w * 0.5 * width * ang * half_angle;
        }
    }
    Ok(ORIGIN_STRAIN_C0 * total)
}

/// Coefficient profile of the interpolated vorticity about the origin.
pub fn vorticity_profile(
    s: &EulerState,
    m: &ModulusFamily,
    radii: &[f64],
    sampler: &dyn Sampler,
) -> Result<CoefficientProfile> {
    if !s.symmetry.odd_odd {
        return Err(Error::MissingSymmetry);
    }
    let field = s.scalar(Interpolation::Bicubic)?;
    coefficient_profile(&field, &Point::zeros(), m, radii, sampler)
}

/// `[omega]_{delta;0}` from a direction sweep of the bicubic interpolant.
pub fn vorticity_coefficient_at_origin(
    s: &EulerState,
    m: &ModulusFamily,
    radii: &[f64],
    plateau_tol: f64,
) -> Result<CoefficientEstimate> {
    let p = vorticity_profile(s, m, radii, &DirectionSweep::default())?;
    estimate_coefficient(&p, plateau_tol)
}

/// Header `n, L, t` (little-endian 64-bit) then row-major vorticity.
pub fn write_checkpoint(s: &EulerState, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + 8 * s.omega.len());
    buf.extend_from_slice(&(s.grid.n() as u64).to_le_bytes());
    buf.extend_from_slice(&s.grid.half_period().to_le_bytes());
    buf.extend_from_slice(&s.t.to_le_bytes());
    for v in s.omega.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&buf))
        .map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path, symmetry: SymmetryTag) -> Result<EulerState> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let (grid, t, values) = decode_header_and_values(&bytes, 1)?;
    let n = grid.n();
    let omega = Array2::from_shape_vec((n, n), values).expect("length checked");
    EulerState::new(grid, omega, t, symmetry)
}

pub(crate) fn decode_header_and_values(
    bytes: &[u8],
    components: usize,
) -> Result<(Grid2, f64, Vec<f64>)> {
    let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().expect("8 bytes") };
    if bytes.len() < 24 {
        return Err(Error::Format {
            what: "grid binary",
            reason: format!("{} bytes is shorter than the 24-byte header", bytes.len()),
        });
    }
    let n = u64::from_le_bytes(word(0));
    let l = f64::from_le_bytes(word(1));
    let t = f64::from_le_bytes(word(2));
    if n > 1 << 16 {
        return Err(Error::Format {
            what: "grid binary",
            reason: format!("implausible grid size {n}"),
        });
    }
    let grid = Grid2::new(n as usize, l)?;
    let count = components * grid.n() * grid.n();
    if bytes.len() != 24 + 8 * count {
        return Err(Error::Format {
            what: "grid binary",
            reason: format!(
                "expected {} bytes for n = {n} and {components} component(s), found {}",
                24 + 8 * count,
                bytes.len()
            ),
        });
    }
    let values = (0..count).map(|i| f64::from_le_bytes(word(3 + i))).collect();
    Ok((grid, t, values))
}
