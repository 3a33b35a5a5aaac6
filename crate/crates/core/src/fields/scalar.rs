use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::Array2;

use super::{Grid2, GriddedScalar, Interpolation};
use crate::error::finite;
use crate::euler2d::bahouri_chemin_profile;
use crate::modcont::ModulusFamily;
use crate::registry::{Catalog, ParamDoc};
use crate::{Point, Result};

/// A scalar field that can be evaluated pointwise.
pub trait ScalarField: Send + Sync {
    fn eval(&self, x: &Point) -> Result<f64>;

    /// Exact pointwise coefficient, when the field is built with one.
    fn known_coefficient(&self) -> Option<&KnownCoefficient> {
        None
    }

    /// The sampling grid, for gridded fields.
    fn grid(&self) -> Option<&Grid2> {
        None
    }

    fn node_values(&self) -> Option<&Array2<f64>> {
        None
    }

    /// Smallest radius at which coefficient estimation is meaningful.
    fn min_radius(&self) -> f64 {
        self.grid().map_or(0.0, |g| 4.0 * g.spacing())
    }

    fn label(&self) -> String;
}

/// Evaluates `f` at `x`, rejecting non-finite results.
pub fn eval_scalar(f: &dyn ScalarField, x: &Point) -> Result<f64> {
    finite(f.eval(x)?, "scalar field evaluation")
}

/// Exact value of `[f]_{modulus; center}` for a closed-form field.
#[derive(Clone, Debug, PartialEq)]
pub struct KnownCoefficient {
    pub center: Point,
    pub modulus: ModulusFamily,
    pub value: f64,
}

type ScalarFn = dyn Fn(&Point) -> f64 + Send + Sync;

/// Closed-form scalar field.
#[derive(Clone)]
pub struct AnalyticScalar {
    label: String,
    func: Arc<ScalarFn>,
    known: Option<KnownCoefficient>,
}

impl AnalyticScalar {
    pub fn new<F>(label: impl Into<String>, func: F) -> Self
    where
        F: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            func: Arc::new(func),
            known: None,
        }
    }

    pub fn with_known(mut self, known: KnownCoefficient) -> Self {
        self.known = Some(known);
        self
    }

    pub fn value(&self, x: &Point) -> f64 {
        (self.func)(x)
    }
}

impl fmt::Debug for AnalyticScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticScalar")
            .field("label", &self.label)
            .field("known", &self.known)
            .finish()
    }
}

impl ScalarField for AnalyticScalar {
    fn eval(&self, x: &Point) -> Result<f64> {
        finite((self.func)(x), &self.label)
    }

    fn known_coefficient(&self) -> Option<&KnownCoefficient> {
        self.known.as_ref()
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Samples an analytic field at the nodes of `grid`; node values are exact.
pub fn sample_to_grid(
    f: &AnalyticScalar,
    grid: &Grid2,
    mode: Interpolation,
) -> Result<GriddedScalar> {
    let n = grid.n();
    let mut values = Array2::zeros((n, n));
    for ((a, b), v) in values.indexed_iter_mut() {
        *v = f.eval(&grid.node(a, b))?;
    }
    Ok(GriddedScalar::new(*grid, values, mode)?
        .with_known(f.known.clone())
        .with_label(f.label.clone()))
}

/// `C^inf` radial cutoff: 1 on `[0, inner]`, 0 on `[outer, inf)`.
pub fn smooth_cutoff(r: f64, inner: f64, outer: f64) -> f64 {
    if r <= inner {
        return 1.0;
    }
    if r >= outer {
        return 0.0;
    }
    let s = (outer - r) / (outer - inner);
    let bump = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    bump(s) / (bump(s) + bump(1.0 - s))
}

/// `min((log 1/s)^(-gamma), 1)`, with value 0 at `s = 0`.
pub(crate) fn capped_log_modulus(s: f64, gamma: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= (-1.0f64).exp() {
        1.0
    } else {
        (1.0 / s).ln().powf(-gamma).min(1.0)
    }
}

/// Built-in initial data / test fields, addressable by name from configs.
pub fn scalar_catalog() -> Catalog<Arc<dyn ScalarField>> {
    let mut c: Catalog<Arc<dyn ScalarField>> = Catalog::new("scalar field");
    c.register("zero", "theta = 0", vec![], |_| {
        Ok(Arc::new(AnalyticScalar::new("zero", |_| 0.0)) as Arc<dyn ScalarField>)
    })
    .expect("fresh catalog");
    c.register(
        "constant",
        "theta = value",
        vec![ParamDoc::required("value", "constant value")],
        |p| {
            let v = p.get("value");
            Ok(Arc::new(AnalyticScalar::new(format!("constant({v})"), move |_| v)) as _)
        },
    )
    .expect("fresh catalog");
    c.register(
        "power",
        "theta = |x - c|^beta; Holder(beta) coefficient 1 at c",
        vec![
            ParamDoc::required("beta", "exponent, > 0"),
            ParamDoc::optional("x1", 0.0, "center x1"),
            ParamDoc::optional("x2", 0.0, "center x2"),
        ],
        |p| {
            let beta = p.get("beta");
            let center = Point::new(p.get("x1"), p.get("x2"));
            let mut f = AnalyticScalar::new(format!("power({beta})"), move |x: &Point| {
                (x - center).norm().powf(beta)
            });
            if let Ok(m) = ModulusFamily::holder(beta) {
                f = f.with_known(KnownCoefficient {
                    center,
                    modulus: m,
                    value: 1.0,
                });
            } else if beta <= 0.0 {
                return Err(crate::Error::param("beta", "must be positive"));
            }
            Ok(Arc::new(f) as _)
        },
    )
    .expect("fresh catalog");
    c.register(
        "log_holder",
        "theta = min((log 1/|x|)^-gamma, 1), smoothly cut off at `cutoff`; log-Holder(gamma) coefficient 1 at 0",
        vec![
            ParamDoc::required("gamma", "log exponent, > 0"),
            ParamDoc::optional("cutoff", PI / 2.0, "support radius (L/2 for the default box)"),
        ],
        |p| {
            let gamma = p.get("gamma");
            let modulus = ModulusFamily::log_holder(gamma)?;
            let cutoff = p.get("cutoff");
            if cutoff <= 1.0 {
                return Err(crate::Error::param("cutoff", "must exceed 1 so the cap sits outside estimation balls"));
            }
            let f = AnalyticScalar::new(format!("log_holder({gamma})"), move |x: &Point| {
                let r = x.norm();
                capped_log_modulus(r, gamma) * smooth_cutoff(r, cutoff / 2.0, cutoff)
            })
            .with_known(KnownCoefficient {
                center: Point::zeros(),
                modulus,
                value: 1.0,
            });
            Ok(Arc::new(f) as _)
        },
    )
    .expect("fresh catalog");
    c.register(
        "sin_cos",
        "theta = amplitude * sin(k1 x1) cos(k2 x2)",
        vec![
            ParamDoc::optional("k1", 1.0, "x1 wavenumber"),
            ParamDoc::optional("k2", 1.0, "x2 wavenumber"),
            ParamDoc::optional("amplitude", 1.0, "amplitude"),
        ],
        |p| {
            let (k1, k2, a) = (p.get("k1"), p.get("k2"), p.get("amplitude"));
            Ok(Arc::new(AnalyticScalar::new("sin_cos", move |x: &Point| {
                a * (k1 * x.x).sin() * (k2 * x.y).cos()
            })) as _)
        },
    )
    .expect("fresh catalog");
    c.register(
        "bahouri_chemin",
        "omega0 = 2 x1 x2 / (4 x1^2 + x2^2) |x|^beta, cut off on 1 <= |x| <= 1.5; Holder(beta) coefficient 1/2 at 0",
        vec![ParamDoc::required("beta", "Holder exponent in (0, 1]")],
        |p| {
            let beta = p.get("beta");
            let modulus = ModulusFamily::holder(beta)?;
            let f = AnalyticScalar::new(format!("bahouri_chemin({beta})"), move |x: &Point| {
                bahouri_chemin_profile(x, beta)
            })
            .with_known(KnownCoefficient {
                center: Point::zeros(),
                modulus,
                value: 0.5,
            });
            Ok(Arc::new(f) as _)
        },
    )
    .expect("fresh catalog");
    c.register(
        "log_odd_odd",
        "omega = (log 1/|y|)^-gamma sin(2 phi) for |y| < outer, 0 beyond; odd in both axes",
        vec![
            ParamDoc::optional("gamma", 1.0, "log exponent, > 0"),
            ParamDoc::optional("outer", 0.5, "support radius, < 1"),
        ],
        |p| {
            let gamma = p.get("gamma");
            let modulus = ModulusFamily::log_holder(gamma)?;
            let outer = p.get("outer");
            if !(outer > 0.0 && outer < 1.0) {
                return Err(crate::Error::param("outer", "must lie in (0, 1)"));
            }
            let f = AnalyticScalar::new(format!("log_odd_odd({gamma})"), move |y: &Point| {
                log_odd_odd_profile(y, gamma, outer)
            })
            .with_known(KnownCoefficient {
                center: Point::zeros(),
                modulus,
                value: 1.0,
            });
            Ok(Arc::new(f) as _)
        },
    )
    .expect("fresh catalog");
    c
}

pub(crate) fn log_odd_odd_profile(y: &Point, gamma: f64, outer: f64) -> f64 {
    let r2 = y.norm_squared();
    if r2 == 0.0 || r2 >= outer * outer {
        return 0.0;
    }
    let r = r2.sqrt();
    (1.0 / r).ln().powf(-gamma) * 2.0 * y.x * y.y / r2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::CatalogSpec;

    #[test]
    fn eval_examples() {
        let zero = AnalyticScalar::new("zero", |_| 0.0);
        assert_eq!(eval_scalar(&zero, &Point::new(0.3, -0.7)).unwrap(), 0.0);
        let root = AnalyticScalar::new("root", |x: &Point| x.norm().powf(0.5));
        assert_eq!(eval_scalar(&root, &Point::new(1.0, 0.0)).unwrap(), 1.0);
        let bad = AnalyticScalar::new("bad", |_| f64::INFINITY);
        assert!(eval_scalar(&bad, &Point::zeros()).is_err());
    }

    #[test]
    fn sampling_is_exact_at_nodes() {
        let g = Grid2::new(16, PI).unwrap();
        let one = AnalyticScalar::new("one", |_| 1.0);
        let s = sample_to_grid(&one, &g, Interpolation::Bicubic).unwrap();
        assert!(s.values().iter().all(|&v| v == 1.0));

        let g = Grid2::new(256, PI).unwrap();
        let f = AnalyticScalar::new("root", |x: &Point| x.norm().powf(0.5));
        let s = sample_to_grid(&f, &g, Interpolation::Bicubic).unwrap();
        let i = ((1.0 + PI) / g.spacing()).round() as usize;
        let node = g.node(i, g.origin_index());
        assert_eq!(s.values()[(i, g.origin_index())], node.norm().powf(0.5));
        assert_eq!(s.eval(&node).unwrap(), s.values()[(i, g.origin_index())]);
    }

    #[test]
    fn known_metadata_survives_sampling() {
        let cat = scalar_catalog();
        let f = cat
            .build(&CatalogSpec::new("log_holder").with("gamma", 0.5))
            .unwrap();
        assert_eq!(f.known_coefficient().unwrap().value, 1.0);
        let g = Grid2::new(16, PI).unwrap();
        let analytic = AnalyticScalar::new("p", |x: &Point| x.norm()).with_known(KnownCoefficient {
            center: Point::zeros(),
            modulus: ModulusFamily::holder(1.0).unwrap(),
            value: 1.0,
        });
        let s = sample_to_grid(&analytic, &g, Interpolation::Bicubic).unwrap();
        assert_eq!(s.known_coefficient().unwrap().value, 1.0);
    }

    #[test]
    fn log_holder_data_is_exact_modulus_near_origin() {
        let cat = scalar_catalog();
        let f = cat
            .build(&CatalogSpec::new("log_holder").with("gamma", 0.5))
            .unwrap();
        let x = Point::new(1e-3, 0.0);
        let v = f.eval(&x).unwrap();
        assert!((v - (1e3f64).ln().powf(-0.5)).abs() < 1e-15);
        assert_eq!(f.eval(&Point::zeros()).unwrap(), 0.0);
        assert_eq!(f.eval(&Point::new(0.5, 0.0)).unwrap(), 1.0);
        assert_eq!(f.eval(&Point::new(3.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn cutoff_is_monotone_and_bounded() {
        let mut prev = 1.0;
        for k in 0..=100 {
            let r = 1.0 + 0.5 * k as f64 / 100.0;
            let v = smooth_cutoff(r, 1.0, 1.5);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        assert_eq!(smooth_cutoff(1.5, 1.0, 1.5), 0.0);
    }
}
