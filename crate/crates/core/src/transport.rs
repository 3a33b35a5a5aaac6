//! Transport `theta_t + u . grad theta = 0` solved by exact Lagrangian pullback.

use std::sync::Arc;

use serde::Serialize;

use crate::fields::{ScalarField, VelocityField};
use crate::flow::{advect, integrate_trajectory, inverse_trajectory, lipschitz_budget, TimeGrid};
use crate::modcont::{
    coefficient_profile, estimate_coefficient, sandwich_bounds, CoefficientEstimate,
    CoefficientProfile, Convergence, ModulusFamily, Sampler, S_MAX,
};
use crate::{Error, Point, Result};

#[derive(Clone)]
pub struct EstimatorSettings {
    pub radii: Vec<f64>,
    pub sampler: Arc<dyn Sampler>,
    pub plateau_tol: f64,
}

#[derive(Clone)]
pub struct TransportProblem {
    pub u: Arc<dyn VelocityField>,
    pub theta0: Arc<dyn ScalarField>,
    pub x0: Point,
    pub modulus: ModulusFamily,
    pub time_grid: TimeGrid,
    pub estimator: EstimatorSettings,
}

impl TransportProblem {
    pub fn new(
        u: Arc<dyn VelocityField>,
        theta0: Arc<dyn ScalarField>,
        x0: Point,
        modulus: ModulusFamily,
        time_grid: TimeGrid,
        estimator: EstimatorSettings,
    ) -> Result<Self> {
        if !(x0.x.is_finite() && x0.y.is_finite()) {
            return Err(Error::param("center", "must be finite"));
        }
        if !(estimator.plateau_tol > 0.0) {
            return Err(Error::param("plateau_tol", "must be positive"));
        }
        // Boundedness probe on a coarse lattice around the tracked point.
        for i in -8..=8 {
            for j in -8..=8 {
                let p = x0 + Point::new(i as f64, j as f64) * (S_MAX / 8.0);
                let v = theta0.eval(&p)?;
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("initial data at ({}, {})", p.x, p.y)));
                }
            }
        }
        Ok(Self {
            u,
            theta0,
            x0,
            modulus,
            time_grid,
            estimator,
        })
    }

    /// `theta(., t)` as a scalar field.
    pub fn at_time(&self, t: f64) -> Result<PulledBack<'_>> {
        self.time_grid.node_index(t)?;
        Ok(PulledBack { problem: self, t })
    }
}

/// `x -> theta0(phi^{-1}(x, t))`.
pub struct PulledBack<'a> {
    problem: &'a TransportProblem,
    t: f64,
}

impl ScalarField for PulledBack<'_> {
    fn eval(&self, x: &Point) -> Result<f64> {
        solve_theta(self.problem, x, self.t)
    }

    fn label(&self) -> String {
        format!("{} pulled back to t = {}", self.problem.theta0.label(), self.t)
    }
}

pub fn solve_theta(p: &TransportProblem, x: &Point, t: f64) -> Result<f64> {
    if t == 0.0 {
        return p.theta0.eval(x);
    }
    let alpha = inverse_trajectory(p.u.as_ref(), x, t, &p.time_grid)?;
    p.theta0.eval(&alpha)
}

#[derive(Clone, Debug, Serialize)]
pub struct PreservationRecord {
    pub t: f64,
    pub position: [f64; 2],
    pub estimate: f64,
    pub initial: f64,
    /// `|est(t) - est(0)| / max(est(0), eps)`.
    pub gap: f64,
    pub convergence: Convergence,
    pub slope: f64,
    /// `mu(t)` from the global gradient bound.
    pub mu: f64,
    /// `int_0^t |grad u(phi(x0, s), s)| ds`.
    pub local_integral: f64,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
}

impl PreservationRecord {
    pub fn csv_header() -> &'static str {
        "t,x1,x2,estimate,initial,gap,lower_bound,upper_bound,mu_t,converged"
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.position[0],
            self.position[1],
            self.estimate,
            self.initial,
            self.gap,
            opt(self.lower_bound),
            opt(self.upper_bound),
            self.mu,
            u8::from(self.convergence == Convergence::Converged)
        )
    }
}

pub fn records_to_csv(records: &[PreservationRecord]) -> String {
    let mut s = String::from(PreservationRecord::csv_header());
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

pub fn relative_gap(estimate: f64, initial: f64) -> f64 {
    (estimate - initial).abs() / initial.max(f64::EPSILON)
}

/// Profile of `theta(., t)` about `phi(x0, t)`.
pub fn transported_profile(p: &TransportProblem, t: f64) -> Result<CoefficientProfile> {
    let field = p.at_time(t)?;
    let k = p.time_grid.node_index(t)?;
    let center = advect(p.u.as_ref(), &p.x0, 0.0, t, k)?;
    coefficient_profile(
        &field,
        &center,
        &p.modulus,
        &p.estimator.radii,
        p.estimator.sampler.as_ref(),
    )
}

fn initial_estimate(p: &TransportProblem) -> Result<CoefficientEstimate> {
    let prof = coefficient_profile(
        p.theta0.as_ref(),
        &p.x0,
        &p.modulus,
        &p.estimator.radii,
        p.estimator.sampler.as_ref(),
    )?;
    estimate_coefficient(&prof, p.estimator.plateau_tol)
}

fn record(p: &TransportProblem, t: f64, initial: &CoefficientEstimate) -> Result<PreservationRecord> {
    let k = p.time_grid.node_index(t)?;
    let (mu, local, position) = if k == 0 {
        (1.0, 0.0, p.x0)
    } else {
        let sub = p.time_grid.up_to(t)?;
        let traj = integrate_trajectory(p.u.as_ref(), &p.x0, &sub)?;
        let budget = lipschitz_budget(p.u.as_ref(), &sub, Some(&traj))?;
        let local = budget.local_integral.as_ref().expect("trajectory supplied")[k];
        (budget.mu_end(), local, traj.end())
    };
    let r_max = p.estimator.radii[0];
    if mu * r_max > S_MAX * (1.0 + 1e-12) {
        return Err(Error::param(
            "radii",
            format!("mu(t) * r_max = {} exceeds s_max = {S_MAX} at t = {t}", mu * r_max),
        ));
    }
    let est = if k == 0 {
        initial.clone()
    } else {
        estimate_coefficient(&transported_profile(p, t)?, p.estimator.plateau_tol)?
    };
    let (lower_bound, upper_bound) = match p.modulus {
        ModulusFamily::Holder { beta } => {
            let (lo, hi) = sandwich_bounds(initial.value, beta, local)?;
            (Some(lo), Some(hi))
        }
        ModulusFamily::LogHolder { .. } => (None, None),
    };
    let convergence = match (initial.convergence, est.convergence) {
        (Convergence::Converged, c) => c,
        (c, _) => c,
    };
    Ok(PreservationRecord {
        t,
        position: [position.x, position.y],
        estimate: est.value,
        initial: initial.value,
        gap: relative_gap(est.value, initial.value),
        convergence,
        slope: est.slope,
        mu,
        local_integral: local,
        lower_bound,
        upper_bound,
    })
}

/// Estimate at `t` paired with the `t = 0` estimate.
pub fn transported_coefficient(p: &TransportProblem, t: f64) -> Result<PreservationRecord> {
    let initial = initial_estimate(p)?;
    record(p, t, &initial)
}

/// Records at each output time; the initial estimate is computed once.
pub fn preservation_curve(p: &TransportProblem, times: &[f64]) -> Result<Vec<PreservationRecord>> {
    let initial = initial_estimate(p)?;
    times.iter().map(|&t| record(p, t, &initial)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{AnalyticScalar, LinearStrain, ZeroVelocity};
    use crate::modcont::{geometric_radii, DirectionSweep};
    use std::f64::consts::E;

    fn problem(u: Arc<dyn VelocityField>, f: AnalyticScalar, m: ModulusFamily, radii: Vec<f64>) -> TransportProblem {
        TransportProblem::new(
            u,
            Arc::new(f),
            Point::zeros(),
            m,
            TimeGrid::new(1.0, 0.01).unwrap(),
            EstimatorSettings {
                radii,
                sampler: Arc::new(DirectionSweep::default()),
                plateau_tol: 0.01,
            },
        )
        .unwrap()
    }

    #[test]
    fn pullback_examples() {
        let norm = AnalyticScalar::new("norm", |x: &Point| x.norm());
        let m = ModulusFamily::holder(1.0).unwrap();
        let p = problem(Arc::new(ZeroVelocity), norm.clone(), m, vec![0.1]);
        assert_eq!(solve_theta(&p, &Point::new(0.3, 0.4), 1.0).unwrap(), 0.5);
        let p = problem(Arc::new(LinearStrain { lambda: 1.0 }), norm, m, vec![0.1]);
        assert!((solve_theta(&p, &Point::new(E, 0.0), 1.0).unwrap() - 1.0).abs() < 1e-10);
        assert!(solve_theta(&p, &Point::new(E, 0.0), 0.505).is_err());
    }

    #[test]
    fn zero_flow_keeps_the_coefficient() {
        let f = AnalyticScalar::new("root", |x: &Point| x.norm().sqrt());
        let m = ModulusFamily::holder(0.5).unwrap();
        let p = problem(Arc::new(ZeroVelocity), f, m, geometric_radii(0.1, 1e-4, 0.5).unwrap());
        let recs = preservation_curve(&p, &[0.0, 0.5, 1.0]).unwrap();
        for r in &recs {
            assert!(r.gap < 1e-12);
            assert_eq!(r.mu, 1.0);
            assert_eq!(r.lower_bound, r.upper_bound);
        }
    }

    #[test]
    fn holder_estimate_saturates_the_upper_bound() {
        let f = AnalyticScalar::new("root", |x: &Point| x.norm().sqrt());
        let m = ModulusFamily::holder(0.5).unwrap();
        let p = problem(
            Arc::new(LinearStrain { lambda: 1.0 }),
            f,
            m,
            geometric_radii(0.1, 1e-4, 0.5).unwrap(),
        );
        let r = transported_coefficient(&p, 1.0).unwrap();
        // Oracle: sup over directions of |(e^-t c, e^t s)|^beta is attained at s = 1.
        assert!((r.estimate - 0.5f64.exp()).abs() < 1e-6, "{}", r.estimate);
        assert!((r.upper_bound.unwrap() - 0.5f64.exp()).abs() < 1e-9);
        assert!((r.local_integral - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radii_too_large_for_mu() {
        let f = AnalyticScalar::new("root", |x: &Point| x.norm().sqrt());
        let m = ModulusFamily::holder(0.5).unwrap();
        let p = problem(Arc::new(LinearStrain { lambda: 1.0 }), f, m, vec![0.3, 0.2, 0.1, 0.05]);
        assert!(transported_coefficient(&p, 1.0).is_err());
    }

    #[test]
    fn csv_schema() {
        let f = AnalyticScalar::new("zero", |_| 0.0);
        let m = ModulusFamily::log_holder(1.0).unwrap();
        let p = problem(Arc::new(ZeroVelocity), f, m, geometric_radii(0.1, 1e-4, 0.1).unwrap());
        let recs = preservation_curve(&p, &[0.0, 1.0]).unwrap();
        let csv = records_to_csv(&recs);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), PreservationRecord::csv_header());
        assert_eq!(lines.count(), 2);
        assert!(recs.iter().all(|r| r.gap == 0.0 && r.estimate == 0.0));
    }
}
