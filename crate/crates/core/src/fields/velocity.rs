use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use serde::Serialize;

use super::{Grid2, GriddedScalar, Interpolation, ScalarField};
use crate::registry::{Catalog, ParamDoc};
use crate::spectral::{derivative_real, Fft2};
use crate::{Error, Jacobian, Point, Result};

/// Sup-norm of the velocity gradient at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GradBound {
    pub t: f64,
    pub value: f64,
}

/// A time-dependent planar velocity field.
pub trait VelocityField: Send + Sync {
    fn name(&self) -> String;

    fn velocity(&self, x: &Point, t: f64) -> Result<Point>;

    /// `J[(i, j)] = d u_i / d x_j`.
    fn gradient(&self, x: &Point, t: f64) -> Result<Jacobian>;

    /// Supremum over the domain of the largest singular value of the gradient.
    fn grad_sup(&self, t: f64) -> Result<GradBound>;

    fn time_range(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Half-period `L` when the field lives on the torus `[-L, L)^2`.
    fn half_period(&self) -> Option<f64> {
        None
    }

    fn divergence(&self, x: &Point, t: f64) -> Result<f64> {
        Ok(self.gradient(x, t)?.trace())
    }
}

pub fn eval_velocity(u: &dyn VelocityField, x: &Point, t: f64) -> Result<Point> {
    u.velocity(x, t)
}

pub fn grad_sup(u: &dyn VelocityField, t: f64) -> Result<GradBound> {
    u.grad_sup(t)
}

/// Largest singular value of a 2x2 matrix.
pub fn max_singular_value(m: &Jacobian) -> f64 {
    let q = m.iter().map(|v| v * v).sum::<f64>();
    let det = m.determinant();
    let disc = (q * q - 4.0 * det * det).max(0.0).sqrt();
    ((q + disc) / 2.0).sqrt()
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("time".into()))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroVelocity;

impl VelocityField for ZeroVelocity {
    fn name(&self) -> String {
        "zero".into()
    }
    fn velocity(&self, _x: &Point, t: f64) -> Result<Point> {
        check_time(t)?;
        Ok(Point::zeros())
    }
    fn gradient(&self, _x: &Point, t: f64) -> Result<Jacobian> {
        check_time(t)?;
        Ok(Jacobian::zeros())
    }
    fn grad_sup(&self, t: f64) -> Result<GradBound> {
        check_time(t)?;
        Ok(GradBound { t, value: 0.0 })
    }
}

/// `u = omega (-x2, x1)`.
#[derive(Clone, Copy, Debug)]
pub struct RigidRotation {
    pub omega: f64,
}

impl VelocityField for RigidRotation {
    fn name(&self) -> String {
        format!("rigid_rotation(omega={})", self.omega)
    }
    fn velocity(&self, x: &Point, t: f64) -> Result<Point> {
        check_time(t)?;
        Ok(Point::new(-self.omega * x.y, self.omega * x.x))
    }
    fn gradient(&self, _x: &Point, t: f64) -> Result<Jacobian> {
        check_time(t)?;
        Ok(Jacobian::new(0.0, -self.omega, self.omega, 0.0))
    }
    fn grad_sup(&self, t: f64) -> Result<GradBound> {
        check_time(t)?;
        Ok(GradBound {
            t,
            value: self.omega.abs(),
        })
    }
}

/// `u = (lambda x1, -lambda x2)`: hyperbolic stagnation point at the origin.
#[derive(Clone, Copy, Debug)]
pub struct LinearStrain {
    pub lambda: f64,
}

impl VelocityField for LinearStrain {
    fn name(&self) -> String {
        format!("linear_strain(lambda={})", self.lambda)
    }
    fn velocity(&self, x: &Point, t: f64) -> Result<Point> {
        check_time(t)?;
        Ok(Point::new(self.lambda * x.x, -self.lambda * x.y))
    }
    fn gradient(&self, _x: &Point, t: f64) -> Result<Jacobian> {
        check_time(t)?;
        Ok(Jacobian::new(self.lambda, 0.0, 0.0, -self.lambda))
    }
    fn grad_sup(&self, t: f64) -> Result<GradBound> {
        check_time(t)?;
        Ok(GradBound {
            t,
            value: self.lambda.abs(),
        })
    }
}

/// `u = (lambda x2, 0)`.
#[derive(Clone, Copy, Debug)]
pub struct Shear {
    pub lambda: f64,
}

impl VelocityField for Shear {
    fn name(&self) -> String {
        format!("shear(lambda={})", self.lambda)
    }
    fn velocity(&self, x: &Point, t: f64) -> Result<Point> {
        check_time(t)?;
        Ok(Point::new(self.lambda * x.y, 0.0))
    }
    fn gradient(&self, _x: &Point, t: f64) -> Result<Jacobian> {
        check_time(t)?;
        Ok(Jacobian::new(0.0, self.lambda, 0.0, 0.0))
    }
    fn grad_sup(&self, t: f64) -> Result<GradBound> {
        check_time(t)?;
        Ok(GradBound {
            t,
            value: self.lambda.abs(),
        })
    }
}

/// `u = A (-sin x1 cos x2, cos x1 sin x2)`, `2 pi`-periodic.
#[derive(Clone, Copy, Debug)]
pub struct Cellular {
    pub amplitude: f64,
}

impl VelocityField for Cellular {
    fn name(&self) -> String {
        format!("cellular(A={})", self.amplitude)
    }
    fn velocity(&self, x: &Point, t: f64) -> Result<Point> {
        check_time(t)?;
        let (s1, c1) = x.x.sin_cos();
        let (s2, c2) = x.y.sin_cos();
        Ok(Point::new(-self.amplitude * s1 * c2, self.amplitude * c1 * s2))
    }
    fn gradient(&self, x: &Point, t: f64) -> Result<Jacobian> {
        check_time(t)?;
        let a = self.amplitude;
        let (s1, c1) = x.x.sin_cos();
        let (s2, c2) = x.y.sin_cos();
        Ok(Jacobian::new(-a * c1 * c2, a * s1 * s2, -a * s1 * s2, a * c1 * c2))
    }
    fn grad_sup(&self, t: f64) -> Result<GradBound> {
        check_time(t)?;
        // sigma_max = A (|cos x1 cos x2| + |sin x1 sin x2|), maximal (= A) at the origin.
        Ok(GradBound {
            t,
            value: self.amplitude.abs(),
        })
    }
    fn half_period(&self) -> Option<f64> {
        Some(std::f64::consts::PI)
    }
}

/// One stored time slice of a gridded velocity field.
#[derive(Clone, Debug)]
pub struct VelocitySlice {
    pub t: f64,
    u: [GriddedScalar; 2],
    // d1u1, d2u1, d1u2, d2u2
    grad: [GriddedScalar; 4],
}

impl VelocitySlice {
    /// Builds a slice from node values; gradients are differentiated spectrally.
    pub fn from_nodes(grid: Grid2, t: f64, u1: Array2<f64>, u2: Array2<f64>) -> Result<Self> {
        let fft = Fft2::new(grid.n());
        let d = |v: &Array2<f64>, axis| derivative_real(&fft, v, axis, &grid);
        let grads = [d(&u1, 0), d(&u1, 1), d(&u2, 0), d(&u2, 1)];
        let mk = |v: Array2<f64>| GriddedScalar::new(grid, v, Interpolation::Bicubic);
        let [g0, g1, g2, g3] = grads;
        Ok(Self {
            t,
            u: [mk(u1)?, mk(u2)?],
            grad: [mk(g0)?, mk(g1)?, mk(g2)?, mk(g3)?],
        })
    }

    pub fn grid(&self) -> &Grid2 {
        self.u[0].grid().expect("gridded")
    }

    pub fn components(&self) -> (&Array2<f64>, &Array2<f64>) {
        (self.u[0].values(), self.u[1].values())
    }

    /// Node values of `d1u1, d2u1, d1u2, d2u2`.
    pub fn gradient_nodes(&self) -> [&Array2<f64>; 4] {
        [
            self.grad[0].values(),
            self.grad[1].values(),
            self.grad[2].values(),
            self.grad[3].values(),
        ]
    }

    fn velocity(&self, x: &Point) -> Point {
        Point::new(self.u[0].interpolate(x), self.u[1].interpolate(x))
    }

    fn gradient(&self, x: &Point) -> Jacobian {
        let g = |k: usize| self.grad[k].interpolate(x);
        Jacobian::new(g(0), g(1), g(2), g(3))
    }

    fn node_gradient(&self, a: usize, b: usize) -> Jacobian {
        let g = |k: usize| self.grad[k].values()[(a, b)];
        Jacobian::new(g(0), g(1), g(2), g(3))
    }
}

/// Gridded velocity: bicubic in space, linear in time between slices.
#[derive(Clone, Debug)]
pub struct GriddedVelocity {
    grid: Grid2,
    slices: Vec<VelocitySlice>,
    frozen: bool,
}

impl GriddedVelocity {
    /// A steady field valid at every time.
    pub fn frozen(slice: VelocitySlice) -> Self {
        Self {
            grid: *slice.grid(),
            slices: vec![slice],
            frozen: true,
        }
    }

    /// Time-ordered slices; valid on `[t_first, t_last]` only.
    pub fn sequence(slices: Vec<VelocitySlice>) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::Format {
                what: "velocity sequence",
                reason: "no slices".into(),
            })?;
        let grid = *first.grid();
        for w in slices.windows(2) {
            if !(w[1].t > w[0].t) || *w[1].grid() != grid {
                return Err(Error::Format {
                    what: "velocity sequence",
                    reason: "slices must share a grid and have increasing times".into(),
                });
            }
        }
        Ok(Self {
            grid,
            slices,
            frozen: false,
        })
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn slices(&self) -> &[VelocitySlice] {
        &self.slices
    }

    /// Bracketing slices and the weight of the later one.
    fn bracket(&self, t: f64) -> Result<(usize, usize, f64)> {
        if self.frozen {
            return Ok((0, 0, 0.0));
        }
        let (start, end) = self.time_range();
        let eps = 1e-12 * (1.0 + end.abs());
        if !(t >= start - eps && t <= end + eps) {
            return Err(Error::TimeOutOfRange { t, start, end });
        }
        let t = t.clamp(start, end);
        let k = self
            .slices
            .partition_point(|s| s.t <= t)
            .saturating_sub(1)
            .min(self.slices.len() - 1);
        if k + 1 == self.slices.len() {
            return Ok((k, k, 0.0));
        }
        let (t0, t1) = (self.slices[k].t, self.slices[k + 1].t);
        Ok((k, k + 1, (t - t0) / (t1 - t0)))
    }
}

impl VelocityField for GriddedVelocity {
    fn name(&self) -> String {
        format!("gridded(n={}, slices={})", self.grid.n(), self.slices.len())
    }

    fn velocity(&self, x: &Point, t: f64) -> Result<Point> {
        let (a, b, w) = self.bracket(t)?;
        let v = if w == 0.0 {
            self.slices[a].velocity(x)
        } else {
            self.slices[a].velocity(x) * (1.0 - w) + self.slices[b].velocity(x) * w
        };
        crate::error::finite(v.x + v.y, "gridded velocity")?;
        Ok(v)
    }

    fn gradient(&self, x: &Point, t: f64) -> Result<Jacobian> {
        let (a, b, w) = self.bracket(t)?;
        if w == 0.0 {
            return Ok(self.slices[a].gradient(x));
        }
        Ok(self.slices[a].gradient(x) * (1.0 - w) + self.slices[b].gradient(x) * w)
    }

    fn grad_sup(&self, t: f64) -> Result<GradBound> {
        let (a, b, w) = self.bracket(t)?;
        let n = self.grid.n();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let m = self.slices[a].node_gradient(i, j) * (1.0 - w)
                    + self.slices[b].node_gradient(i, j) * w;
                best = best.max(max_singular_value(&m));
            }
        }
        Ok(GradBound { t, value: best })
    }

    fn time_range(&self) -> (f64, f64) {
        if self.frozen {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (self.slices[0].t, self.slices[self.slices.len() - 1].t)
        }
    }

    fn half_period(&self) -> Option<f64> {
        Some(self.grid.half_period())
    }
}

/// Writes `n, L, t` (little-endian 64-bit) followed by `u1` then `u2`, row-major.
pub fn write_velocity_slice(slice: &VelocitySlice, path: &Path) -> Result<()> {
    let g = slice.grid();
    let (u1, u2) = slice.components();
    let mut buf = Vec::with_capacity(24 + 16 * u1.len());
    buf.extend_from_slice(&(g.n() as u64).to_le_bytes());
    buf.extend_from_slice(&g.half_period().to_le_bytes());
    buf.extend_from_slice(&slice.t.to_le_bytes());
    for v in u1.iter().chain(u2.iter()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&buf))
        .map_err(|e| Error::io(path, e))
}

pub fn read_velocity_slice(path: &Path) -> Result<VelocitySlice> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let (grid, t, values) = crate::euler2d::decode_header_and_values(&bytes, 2)?;
    let n = grid.n();
    let mut it = values.chunks(n * n);
    let take = |c: Option<&[f64]>| -> Array2<f64> {
        Array2::from_shape_vec((n, n), c.expect("length checked").to_vec()).expect("shape")
    };
    let u1 = take(it.next());
    let u2 = take(it.next());
    VelocitySlice::from_nodes(grid, t, u1, u2)
}

/// Built-in analytic velocity fields.
pub fn velocity_catalog() -> Catalog<Arc<dyn VelocityField>> {
    let mut c: Catalog<Arc<dyn VelocityField>> = Catalog::new("velocity field");
    c.register("zero", "u = 0", vec![], |_| Ok(Arc::new(ZeroVelocity) as _))
        .expect("fresh catalog");
    c.register(
        "rigid_rotation",
        "u = omega (-x2, x1)",
        vec![ParamDoc::optional("omega", 1.0, "angular velocity")],
        |p| Ok(Arc::new(RigidRotation { omega: p.get("omega") }) as _),
    )
    .expect("fresh catalog");
    c.register(
        "linear_strain",
        "u = (lambda x1, -lambda x2)",
        vec![ParamDoc::optional("lambda", 1.0, "strain rate")],
        |p| Ok(Arc::new(LinearStrain { lambda: p.get("lambda") }) as _),
    )
    .expect("fresh catalog");
    c.register(
        "shear",
        "u = (lambda x2, 0)",
        vec![ParamDoc::optional("lambda", 1.0, "shear rate")],
        |p| Ok(Arc::new(Shear { lambda: p.get("lambda") }) as _),
    )
    .expect("fresh catalog");
    c.register(
        "cellular",
        "u = A (-sin x1 cos x2, cos x1 sin x2), 2 pi periodic",
        vec![ParamDoc::optional("amplitude", 1.0, "amplitude A")],
        |p| Ok(Arc::new(Cellular { amplitude: p.get("amplitude") }) as _),
    )
    .expect("fresh catalog");
    c
}
