use std::f64::consts::TAU;
use std::sync::Arc;

use crate::fields::ScalarField;
use crate::registry::{Catalog, ParamDoc};
use crate::{Error, Point, Result};

/// Chooses the points at which a sup over `B_r(center)` is approximated.
///
/// Returned points lie in the closed ball of the largest radius and exclude
/// the center. The set for a smaller radius is the subset inside that ball,
/// so sample sets nest across the ladder.
pub trait Sampler: Send + Sync {
    fn name(&self) -> String;

    fn points(&self, field: &dyn ScalarField, center: &Point, radii: &[f64]) -> Result<Vec<Point>>;
}

/// `directions` equi-angular rays times geometric shells between radii.
#[derive(Clone, Copy, Debug)]
pub struct DirectionSweep {
    pub directions: usize,
    /// Shells per ladder interval `[r_{k+1}, r_k)`.
    pub shells: usize,
    /// The innermost shell sits at `inner_ratio * r_min`.
    pub inner_ratio: f64,
}

impl Default for DirectionSweep {
    fn default() -> Self {
        Self {
            directions: 720,
            shells: 8,
            inner_ratio: 0.5,
        }
    }
}

impl DirectionSweep {
    /// Shell distances, largest first.
    pub fn distances(&self, radii: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        for (k, &r) in radii.iter().enumerate() {
            let next = radii.get(k + 1).copied().unwrap_or(r * self.inner_ratio);
            let ratio = next / r;
            for j in 0..self.shells {
                out.push(r * ratio.powf(j as f64 / self.shells as f64));
            }
        }
        if let Some(&last) = radii.last() {
            out.push(last * self.inner_ratio);
        }
        out
    }
}

impl Sampler for DirectionSweep {
    fn name(&self) -> String {
        format!(
            "direction_sweep(directions={}, shells={}, inner_ratio={})",
            self.directions, self.shells, self.inner_ratio
        )
    }

    fn points(&self, _field: &dyn ScalarField, center: &Point, radii: &[f64]) -> Result<Vec<Point>> {
        let dirs: Vec<Point> = (0..self.directions)
            .map(|m| {
                let a = TAU * m as f64 / self.directions as f64;
                Point::new(a.cos(), a.sin())
            })
            .collect();
        let mut pts = Vec::new();
        for d in self.distances(radii) {
            pts.extend(dirs.iter().map(|u| center + u * d));
        }
        Ok(pts)
    }
}

/// Every grid node inside the largest ball; requires a gridded field.
#[derive(Clone, Copy, Debug, Default)]
pub struct GridSampler;

impl Sampler for GridSampler {
    fn name(&self) -> String {
        "grid".into()
    }

    fn points(&self, field: &dyn ScalarField, center: &Point, radii: &[f64]) -> Result<Vec<Point>> {
        let grid = field.grid().ok_or_else(|| {
            Error::Config("grid sampler needs a gridded field".into())
        })?;
        let r = radii.first().copied().unwrap_or(0.0);
        let h = grid.spacing();
        let n = grid.n() as i64;
        let reach = (r / h).ceil() as i64 + 1;
        let (c1, _) = grid.locate(center.x);
        let (c2, _) = grid.locate(center.y);
        let mut pts = Vec::new();
        for di in -reach..=reach {
            for dj in -reach..=reach {
                let a = (c1 as i64 + di).rem_euclid(n) as usize;
                let b = (c2 as i64 + dj).rem_euclid(n) as usize;
                let d = grid.min_image(&(grid.node(a, b) - center));
                let dist = d.norm();
                if dist > 0.0 && dist <= r * (1.0 + 1e-12) {
                    pts.push(center + d);
                }
            }
        }
        Ok(pts)
    }
}

pub fn sampler_catalog() -> Catalog<Arc<dyn Sampler>> {
    let mut c: Catalog<Arc<dyn Sampler>> = Catalog::new("sampler");
    let d = DirectionSweep::default();
    c.register(
        "direction_sweep",
        "equi-angular rays x geometric shells (analytic fields)",
        vec![
            ParamDoc::optional("directions", d.directions as f64, "number of rays"),
            ParamDoc::optional("shells", d.shells as f64, "shells per ladder interval"),
            ParamDoc::optional("inner_ratio", d.inner_ratio, "innermost shell / smallest radius"),
        ],
        |p| {
            let directions = p.usize("directions")?;
            let shells = p.usize("shells")?;
            let inner_ratio = p.get("inner_ratio");
            if directions < 4 || shells == 0 {
                return Err(Error::param("directions", "need at least 4 directions and 1 shell"));
            }
            if !(inner_ratio > 0.0 && inner_ratio < 1.0) {
                return Err(Error::param("inner_ratio", "must lie in (0, 1)"));
            }
            Ok(Arc::new(DirectionSweep {
                directions,
                shells,
                inner_ratio,
            }) as _)
        },
    )
    .expect("fresh catalog");
    c.register("grid", "all grid nodes in the ball (gridded fields)", vec![], |_| {
        Ok(Arc::new(GridSampler) as _)
    })
    .expect("fresh catalog");
    c
}
