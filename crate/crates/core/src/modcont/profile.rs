use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ModulusFamily, Sampler, S_MAX};
use crate::fields::ScalarField;
use crate::{Error, Point, Result};

/// Sampled sups `S(r_k)` on a decreasing ladder of radii.
#[derive(Clone, Debug, Serialize)]
pub struct CoefficientProfile {
    pub center: [f64; 2],
    pub modulus: ModulusFamily,
    pub radii: Vec<f64>,
    pub sup_ratios: Vec<f64>,
    pub samples: Vec<usize>,
    pub sampler: String,
    /// Smallest sampled distance from the center.
    pub inner_scale: f64,
    /// Max ratio over samples within `2 * inner_scale`.
    pub inner_band_max: f64,
    /// Max ratio over samples in `(2 * inner_scale, r_min]`.
    pub outer_band_max: f64,
    /// Allowed violation of nesting monotonicity.
    pub tolerance: f64,
}

impl CoefficientProfile {
    pub fn is_monotone(&self) -> bool {
        self.sup_ratios
            .windows(2)
            .all(|w| w[1] <= w[0] + self.tolerance * w[0].abs().max(1.0))
    }

    /// `r,S` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,S\n");
        for (r, v) in self.radii.iter().zip(&self.sup_ratios) {
            s.push_str(&format!("{r:e},{v:e}\n"));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Converged,
    PlateauNotReached,
    /// The sup is attained at the innermost sampled scale and may grow below it.
    ResolutionLimited,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoefficientEstimate {
    pub value: f64,
    /// `(r_hi, r_lo)` of the fitting window.
    pub window: (f64, f64),
    pub convergence: Convergence,
    /// Least-squares slope of `S` against `ln r` over the window.
    pub slope: f64,
}

impl CoefficientEstimate {
    pub fn converged(&self) -> bool {
        self.convergence == Convergence::Converged
    }
}

/// Geometric ladder `r_max, r_max q, ...` down to (at least) `r_min`.
pub fn geometric_radii(r_max: f64, r_min: f64, q: f64) -> Result<Vec<f64>> {
    if !(r_max > 0.0 && r_min > 0.0 && r_min <= r_max) {
        return Err(Error::param("radii", "need 0 < r_min <= r_max"));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::param("ratio", "ladder ratio must lie in (0, 1)"));
    }
    let mut out = vec![r_max];
    let mut k = 1;
    loop {
        let r = r_max * q.powi(k);
        if r < r_min * (1.0 - 1e-9) {
            break;
        }
        out.push(r);
        k += 1;
    }
    Ok(out)
}

fn validate_radii(radii: &[f64], h_min: f64) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::TooFewRadii { needed: 1, got: 0 });
    }
    for w in radii.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::param("radii", "must be strictly decreasing"));
        }
    }
    for &r in radii {
        if !(r > 0.0 && r <= S_MAX) {
            return Err(Error::param(
                "radii",
                format!("radius {r} outside the modcont bound (0, s_max = {S_MAX}]"),
            ));
        }
        if r <= h_min {
            return Err(Error::BelowResolution {
                radius: r,
                limit: h_min,
            });
        }
    }
    Ok(())
}

/// Sampled `sup |f(x) - f(x0)| / delta(|x - x0|)` over each `B_{r_k}(x0)`.
pub fn coefficient_profile(
    f: &dyn ScalarField,
    center: &Point,
    modulus: &ModulusFamily,
    radii: &[f64],
    sampler: &dyn Sampler,
) -> Result<CoefficientProfile> {
    validate_radii(radii, f.min_radius())?;
    let f0 = f.eval(center)?;
    let points = sampler.points(f, center, radii)?;
    let mut rated: Vec<(f64, f64)> = points
        .par_iter()
        .map(|p| -> Result<(f64, f64)> {
            let d = (p - center).norm();
            let ratio = (f.eval(p)? - f0).abs() / modulus.value_unchecked(d);
            if !ratio.is_finite() {
                return Err(Error::NonFinite(format!(
                    "ratio at distance {d:e} for {}",
                    f.label()
                )));
            }
            Ok((d, ratio))
        })
        .collect::<Result<_>>()?;
    rated.retain(|&(d, _)| d > 0.0 && d <= radii[0] * (1.0 + 1e-12));
    // Stable: equal distances keep sampler order, so the result is deterministic.
    rated.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut prefix = Vec::with_capacity(rated.len());
    let mut running = 0.0f64;
    for &(_, v) in &rated {
        running = running.max(v);
        prefix.push(running);
    }
    let mut sup_ratios = Vec::with_capacity(radii.len());
    let mut samples = Vec::with_capacity(radii.len());
    for &r in radii {
        let count = rated.partition_point(|&(d, _)| d <= r * (1.0 + 1e-12));
        if count == 0 {
            return Err(Error::EmptySample(r));
        }
        sup_ratios.push(prefix[count - 1]);
        samples.push(count);
    }
    let inner_scale = rated[0].0;
    let r_min = *radii.last().expect("non-empty");
    let band = |lo: f64, hi: f64| {
        rated
            .iter()
            .filter(|&&(d, _)| d > lo && d <= hi * (1.0 + 1e-12))
            .map(|&(_, v)| v)
            .fold(0.0f64, f64::max)
    };
    Ok(CoefficientProfile {
        center: [center.x, center.y],
        modulus: *modulus,
        radii: radii.to_vec(),
        sup_ratios,
        samples,
        sampler: sampler.name(),
        inner_scale,
        inner_band_max: band(0.0, 2.0 * inner_scale),
        outer_band_max: band(2.0 * inner_scale, r_min),
        tolerance: 1e-12,
    })
}

const WINDOW: usize = 4;

/// Smallest-radius value plus a plateau diagnostic over the last four radii.
pub fn estimate_coefficient(p: &CoefficientProfile, plateau_tol: f64) -> Result<CoefficientEstimate> {
    let k = p.radii.len();
    if k < WINDOW {
        return Err(Error::TooFewRadii {
            needed: WINDOW,
            got: k,
        });
    }
    let xs: Vec<f64> = p.radii[k - WINDOW..].iter().map(|r| r.ln()).collect();
    let ys = &p.sup_ratios[k - WINDOW..];
    let slope = least_squares_slope(&xs, ys);
    let value = p.sup_ratios[k - 1];
    let resolution_limited = p.outer_band_max > 0.0
        && p.inner_band_max > p.outer_band_max * (1.0 + plateau_tol)
        || p.outer_band_max == 0.0 && p.inner_band_max > 0.0;
    let convergence = if resolution_limited {
        Convergence::ResolutionLimited
    } else if slope.abs() <= plateau_tol && p.is_monotone() {
        Convergence::Converged
    } else {
        Convergence::PlateauNotReached
    };
    Ok(CoefficientEstimate {
        value,
        window: (p.radii[k - WINDOW], p.radii[k - 1]),
        convergence,
        slope,
    })
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::AnalyticScalar;
    use crate::modcont::DirectionSweep;

    fn sweep() -> DirectionSweep {
        DirectionSweep::default()
    }

    fn synthetic(radii: Vec<f64>, s: impl Fn(f64) -> f64) -> CoefficientProfile {
        CoefficientProfile {
            center: [0.0, 0.0],
            modulus: ModulusFamily::holder(1.0).unwrap(),
            sup_ratios: radii.iter().map(|&r| s(r)).collect(),
            samples: vec![1; radii.len()],
            radii,
            sampler: "synthetic".into(),
            inner_scale: 1e-9,
            inner_band_max: 0.0,
            outer_band_max: 0.0,
            tolerance: 1e-12,
        }
    }

    #[test]
    fn constant_field_gives_zero() {
        let f = AnalyticScalar::new("c", |_| 3.5);
        let m = ModulusFamily::log_holder(2.0).unwrap();
        let p = coefficient_profile(&f, &Point::new(0.1, 0.2), &m, &[0.1, 0.01, 0.001], &sweep())
            .unwrap();
        assert!(p.sup_ratios.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn holder_root_ratio_is_one() {
        let f = AnalyticScalar::new("root", |x: &Point| x.norm().sqrt());
        let m = ModulusFamily::holder(0.5).unwrap();
        let p = coefficient_profile(&f, &Point::zeros(), &m, &[0.1, 0.01, 0.001], &sweep()).unwrap();
        for s in &p.sup_ratios {
            assert!((s - 1.0).abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn capped_log_data_ratio_is_one() {
        // Direct evaluation oracle: for |x| < e^-1 the ratio is exactly 1.
        let f = AnalyticScalar::new("log", |x: &Point| {
            let r = x.norm();
            if r == 0.0 {
                0.0
            } else {
                (1.0 / r).ln().powf(-0.5).min(1.0)
            }
        });
        let m = ModulusFamily::log_holder(0.5).unwrap();
        let radii = geometric_radii(0.1, 1e-6, 0.1).unwrap();
        assert_eq!(radii.len(), 6);
        let p = coefficient_profile(&f, &Point::zeros(), &m, &radii, &sweep()).unwrap();
        for s in &p.sup_ratios {
            assert!((s - 1.0).abs() < 1e-12);
        }
        let e = estimate_coefficient(&p, 1e-3).unwrap();
        assert!(e.converged());
        assert!((e.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scale_covariance() {
        let f = AnalyticScalar::new("f", |x: &Point| (x.x * 3.0).sin() + x.y.abs().sqrt());
        let g = AnalyticScalar::new("g", |x: &Point| -2.5 * ((x.x * 3.0).sin() + x.y.abs().sqrt()));
        let m = ModulusFamily::holder(0.5).unwrap();
        let radii = geometric_radii(0.2, 1e-4, 0.5).unwrap();
        let c = Point::new(0.05, 0.0);
        let pf = coefficient_profile(&f, &c, &m, &radii, &sweep()).unwrap();
        let pg = coefficient_profile(&g, &c, &m, &radii, &sweep()).unwrap();
        for (a, b) in pf.sup_ratios.iter().zip(&pg.sup_ratios) {
            assert!((2.5 * a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn errors() {
        let f = AnalyticScalar::new("z", |_| 0.0);
        let m = ModulusFamily::holder(0.5).unwrap();
        assert!(coefficient_profile(&f, &Point::zeros(), &m, &[0.5, 0.1], &sweep()).is_err());
        assert!(coefficient_profile(&f, &Point::zeros(), &m, &[0.1, 0.2], &sweep()).is_err());
        let p = synthetic(vec![0.1, 0.05, 0.025], |_| 1.0);
        assert!(matches!(
            estimate_coefficient(&p, 0.01),
            Err(Error::TooFewRadii { .. })
        ));
        let bad = AnalyticScalar::new("nan", |x: &Point| {
            let d = (x - Point::new(0.5, 0.5)).norm();
            if d > 0.0 && d < 0.2 { f64::NAN } else { 0.0 }
        });
        assert!(coefficient_profile(&bad, &Point::new(0.5, 0.5), &m, &[0.1], &sweep()).is_err());
    }

    #[test]
    fn estimator_examples() {
        let radii = geometric_radii(0.1, 0.1 / 64.0, 0.5).unwrap();
        let flat = estimate_coefficient(&synthetic(radii.clone(), |_| 1.0), 1e-9).unwrap();
        assert_eq!(flat.value, 1.0);
        assert_eq!(flat.slope, 0.0);
        assert!(flat.converged());

        // S(r) = 1 + r: d S / d ln r = r, the LSQ slope over r_min * {1,2,4,8}
        // is bounded by the largest window radius 8 r_min.
        let r_min = *radii.last().unwrap();
        let lin = synthetic(radii.clone(), |r| 1.0 + r);
        let e = estimate_coefficient(&lin, 8.0 * r_min).unwrap();
        assert!((e.value - (1.0 + r_min)).abs() < 1e-15);
        assert!(e.converged());
        // Closed-form LSQ slope of 2^j r_min against j ln 2, j = 0..3.
        let expected = r_min * (-1.5 * 1.0 - 0.5 * 2.0 + 0.5 * 4.0 + 1.5 * 8.0) / (5.0 * 2f64.ln());
        assert!((e.slope - expected).abs() < 1e-12);

        let wobbly = synthetic(radii, |r| if ((r.ln() / 2f64.ln()).round() as i64) % 2 == 0 { 1.0 } else { 1.3 });
        let e = estimate_coefficient(&wobbly, 0.01).unwrap();
        assert_eq!(e.convergence, Convergence::PlateauNotReached);
    }

    #[test]
    fn blowing_up_ratio_is_resolution_limited() {
        // log-Holder data measured with a Holder modulus: ratio -> inf as x -> 0.
        let f = AnalyticScalar::new("log", |x: &Point| {
            let r = x.norm();
            if r == 0.0 { 0.0 } else { (1.0 / r).ln().powf(-0.5) }
        });
        let m = ModulusFamily::holder(0.5).unwrap();
        let radii = geometric_radii(0.1, 1e-6, 0.1).unwrap();
        let p = coefficient_profile(&f, &Point::zeros(), &m, &radii, &sweep()).unwrap();
        let e = estimate_coefficient(&p, 0.05).unwrap();
        assert_eq!(e.convergence, Convergence::ResolutionLimited);
    }
}
