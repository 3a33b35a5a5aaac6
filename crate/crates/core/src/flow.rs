//! Particle trajectories and flow-map diagnostics.
//!
//! Trajectories solve `d phi / dt = u(phi, t)` with fixed-step classical RK4.
//! Around them sit the Gronwall budget `mu(t) = exp(int_0^t ||grad u||_inf)`,
//! the two-sided separation bound `1/mu <= |phi(a) - phi(b)| / |a - b| <= mu`,
//! and the log-ratio limit used for log-Holder moduli.

use rayon::prelude::*;
use serde::Serialize;

use crate::fields::{grid_wrap, max_singular_value, VelocityField};
use crate::modcont::S_MAX;
use crate::{Error, Point, Result};

/// Uniform time nodes `t_k = T k / steps`, `k = 0..=steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeGrid {
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    /// `t_end / dt` must be (numerically) an integer.
    pub fn new(t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::param("t_end", "must be positive"));
        }
        let steps = (t_end / dt).round();
        if steps < 1.0 || (steps * dt - t_end).abs() > 1e-9 * t_end.max(1.0) {
            return Err(Error::param(
                "dt",
                format!("t_end = {t_end} is not a multiple of dt = {dt}"),
            ));
        }
        Ok(Self {
            t_end,
            steps: steps as usize,
        })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_end
        } else {
            self.t_end * k as f64 / self.steps as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.node(k)).collect()
    }

    /// Index of the node at `t`; `t` must be a node.
    pub fn node_index(&self, t: f64) -> Result<usize> {
        let k = (t / self.dt()).round();
        if k < 0.0 || k > self.steps as f64 || (k * self.dt() - t).abs() > 1e-9 * self.t_end.max(1.0)
        {
            return Err(Error::param("t", format!("{t} is not a node of the time grid")));
        }
        Ok(k as usize)
    }

    /// The same spacing truncated at node `t`.
    pub fn up_to(&self, t: f64) -> Result<TimeGrid> {
        let k = self.node_index(t)?;
        if k == 0 {
            return Err(Error::param("t", "must be positive"));
        }
        Ok(TimeGrid {
            t_end: self.node(k),
            steps: k,
        })
    }

    pub fn refined(&self, factor: usize) -> TimeGrid {
        TimeGrid {
            t_end: self.t_end,
            steps: self.steps * factor.max(1),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub seed: Point,
    pub times: Vec<f64>,
    pub positions: Vec<Point>,
}

impl Trajectory {
    pub fn end(&self) -> Point {
        *self.positions.last().expect("trajectory has the seed")
    }

    /// `t,x1,x2` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x1,x2\n");
        for (t, p) in self.times.iter().zip(&self.positions) {
            s.push_str(&format!("{t},{},{}\n", p.x, p.y));
        }
        s
    }
}

fn wrap(u: &dyn VelocityField, x: Point) -> Point {
    match u.half_period() {
        Some(l) => Point::new(grid_wrap(x.x, l), grid_wrap(x.y, l)),
        None => x,
    }
}

/// One classical RK4 step (negative `dt` integrates backward).
pub fn rk4_step(u: &dyn VelocityField, x: &Point, t: f64, dt: f64) -> Result<Point> {
    let k1 = u.velocity(x, t)?;
    let k2 = u.velocity(&(x + k1 * (dt / 2.0)), t + dt / 2.0)?;
    let k3 = u.velocity(&(x + k2 * (dt / 2.0)), t + dt / 2.0)?;
    let k4 = u.velocity(&(x + k3 * dt), t + dt)?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Flow map from `(x, t0)` to time `t1` in `steps` equal RK4 steps.
pub fn advect(u: &dyn VelocityField, x: &Point, t0: f64, t1: f64, steps: usize) -> Result<Point> {
    let mut p = *x;
    if steps == 0 {
        return Ok(p);
    }
    let dt = (t1 - t0) / steps as f64;
    for k in 0..steps {
        let t = t0 + (t1 - t0) * k as f64 / steps as f64;
        p = wrap(u, rk4_step(u, &p, t, dt)?);
    }
    Ok(p)
}

pub fn integrate_trajectory(u: &dyn VelocityField, x0: &Point, tg: &TimeGrid) -> Result<Trajectory> {
    let times = tg.nodes();
    let mut positions = Vec::with_capacity(times.len());
    positions.push(*x0);
    let dt = tg.dt();
    let mut p = *x0;
    for &t in &times[..times.len() - 1] {
        p = wrap(u, rk4_step(u, &p, t, dt)?);
        if !(p.x.is_finite() && p.y.is_finite()) {
            return Err(Error::NonFinite("trajectory position".into()));
        }
        positions.push(p);
    }
    Ok(Trajectory {
        seed: *x0,
        times,
        positions,
    })
}

/// Foot `alpha` of the characteristic through `(x, t)`: `phi(alpha, t) = x`.
pub fn inverse_trajectory(u: &dyn VelocityField, x: &Point, t: f64, tg: &TimeGrid) -> Result<Point> {
    let k = tg.node_index(t)?;
    advect(u, x, tg.node(k), 0.0, k)
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzBudget {
    pub times: Vec<f64>,
    pub grad_sup: Vec<f64>,
    /// `I(t) = int_0^t ||grad u||_inf ds` (trapezoid).
    pub integral: Vec<f64>,
    /// `mu(t) = exp(I(t))`.
    pub mu: Vec<f64>,
    /// `int_0^t |grad u(phi(x0, s), s)| ds` along the supplied trajectory.
    pub local_integral: Option<Vec<f64>>,
}

impl LipschitzBudget {
    pub fn mu_at(&self, k: usize) -> f64 {
        self.mu[k]
    }

    pub fn mu_end(&self) -> f64 {
        *self.mu.last().expect("non-empty")
    }
}

fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..values.len() {
        acc += 0.5 * (values[k] + values[k - 1]) * (times[k] - times[k - 1]);
        out.push(acc);
    }
    out
}

pub fn lipschitz_budget(
    u: &dyn VelocityField,
    tg: &TimeGrid,
    traj: Option<&Trajectory>,
) -> Result<LipschitzBudget> {
    let times = tg.nodes();
    let grad_sup = times
        .iter()
        .map(|&t| Ok(u.grad_sup(t)?.value))
        .collect::<Result<Vec<_>>>()?;
    let integral = cumulative_trapezoid(&times, &grad_sup);
    let mu = integral.iter().map(|i| i.exp()).collect();
    let local_integral = match traj {
        Some(tr) => {
            if tr.positions.len() != times.len() {
                return Err(Error::param("trajectory", "does not match the time grid"));
            }
            let rates = times
                .iter()
                .zip(&tr.positions)
                .map(|(&t, p)| Ok(max_singular_value(&u.gradient(p, t)?)))
                .collect::<Result<Vec<_>>>()?;
            Some(cumulative_trapezoid(&times, &rates))
        }
        None => None,
    };
    Ok(LipschitzBudget {
        times,
        grad_sup,
        integral,
        mu,
        local_integral,
    })
}

fn separation(u: &dyn VelocityField, a: &Point, b: &Point) -> f64 {
    let d = a - b;
    match u.half_period() {
        Some(l) => Point::new(grid_wrap(d.x, l), grid_wrap(d.y, l)).norm(),
        None => d.norm(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairSummary {
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `min_t ratio(t) * mu(t)`; at least 1 when the lower bound holds.
    pub lower_margin: f64,
    /// `max_t ratio(t) / mu(t)`; at most 1 when the upper bound holds.
    pub upper_margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairViolation {
    pub pair: usize,
    pub t: f64,
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairCheckReport {
    pub slack: f64,
    pub mu_end: f64,
    pub pairs: Vec<PairSummary>,
    pub violations: Vec<PairViolation>,
}

impl PairCheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Tests `|phi(a,t) - phi(b,t)| / |a - b|` against `[1/mu(t), mu(t)]` widened by `slack`.
pub fn bilipschitz_check(
    u: &dyn VelocityField,
    pairs: &[(Point, Point)],
    tg: &TimeGrid,
    slack: f64,
) -> Result<PairCheckReport> {
    if !(slack >= 0.0) {
        return Err(Error::param("slack", "must be non-negative"));
    }
    for (i, (a, b)) in pairs.iter().enumerate() {
        let d = separation(u, a, b);
        if d == 0.0 {
            return Err(Error::CoincidentPair(i));
        }
        if let Some(l) = u.half_period() {
            if d > l / 4.0 {
                return Err(Error::param(
                    "pairs",
                    format!("pair {i} separation {d} exceeds L/4 = {}", l / 4.0),
                ));
            }
        }
    }
    let budget = lipschitz_budget(u, tg, None)?;
    let results: Vec<(PairSummary, Vec<PairViolation>)> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (a, b))| -> Result<_> {
            let ta = integrate_trajectory(u, a, tg)?;
            let tb = integrate_trajectory(u, b, tg)?;
            let d0 = separation(u, a, b);
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            let mut lower_margin = f64::INFINITY;
            let mut upper_margin = 0.0f64;
            let mut bad = Vec::new();
            for k in 0..ta.positions.len() {
                let ratio = separation(u, &ta.positions[k], &tb.positions[k]) / d0;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
                let mu = budget.mu[k];
                lower_margin = lower_margin.min(ratio * mu);
                upper_margin = upper_margin.max(ratio / mu);
                let lower = 1.0 / mu / (1.0 + slack);
                let upper = mu * (1.0 + slack);
                if !(ratio >= lower && ratio <= upper) {
                    bad.push(PairViolation {
                        pair: i,
                        t: ta.times[k],
                        ratio,
                        lower,
                        upper,
                    });
                }
            }
            Ok((
                PairSummary {
                    alpha: [a.x, a.y],
                    beta: [b.x, b.y],
                    min_ratio: lo,
                    max_ratio: hi,
                    lower_margin,
                    upper_margin,
                },
                bad,
            ))
        })
        .collect::<Result<_>>()?;
    let mut summaries = Vec::with_capacity(results.len());
    let mut violations = Vec::new();
    for (s, v) in results {
        summaries.push(s);
        violations.extend(v);
    }
    Ok(PairCheckReport {
        slack,
        mu_end: budget.mu_end(),
        pairs: summaries,
        violations,
    })
}

/// Extremes of the log-modulus ratio over a ball, with the analytic envelope.
#[derive(Clone, Debug, Serialize)]
pub struct LogRatioRow {
    pub r: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `max |ratio - 1|`.
    pub worst_deviation: f64,
    /// `(1 + log mu / log(1/r))^-gamma`.
    pub envelope_lower: f64,
    /// `(1 - log mu / log(1/r))^-gamma`.
    pub envelope_upper: f64,
}

impl LogRatioRow {
    pub fn within_envelope(&self, rel_tol: f64) -> bool {
        self.min_ratio >= self.envelope_lower * (1.0 - rel_tol)
            && self.max_ratio <= self.envelope_upper * (1.0 + rel_tol)
    }
}

/// Sampling of `B_r(x0)` used by [`log_ratio_check`].
#[derive(Clone, Debug)]
pub struct LogRatioSampling {
    pub directions: usize,
    /// Shell distances as fractions of `r`.
    pub shells: Vec<f64>,
}

impl Default for LogRatioSampling {
    fn default() -> Self {
        Self {
            directions: 360,
            shells: vec![1.0, 0.5, 0.25],
        }
    }
}

/// For each radius, the spread of
/// `(log 1/|phi(x0,t) - phi(b,t)|)^-gamma / (log 1/|x0 - b|)^-gamma` over `b` in `B_r(x0)`.
pub fn log_ratio_check(
    u: &dyn VelocityField,
    x0: &Point,
    radii: &[f64],
    t: f64,
    gamma: f64,
    tg: &TimeGrid,
    sampling: &LogRatioSampling,
) -> Result<Vec<LogRatioRow>> {
    if !(gamma > 0.0) {
        return Err(Error::param("gamma", "log_holder requires γ > 0"));
    }
    let sub = tg.up_to(t)?;
    let log_mu = lipschitz_budget(u, &sub, None)?.integral[sub.steps()];
    let center_end = advect(u, x0, 0.0, sub.t_end(), sub.steps())?;
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 0.0 && r <= S_MAX) {
            return Err(Error::param("radii", format!("{r} outside (0, s_max = {S_MAX}]")));
        }
        let log_inv_r = (1.0 / r).ln();
        if log_inv_r <= log_mu {
            return Err(Error::param(
                "radii",
                format!("log(1/r) = {log_inv_r} <= log mu(t) = {log_mu}: envelope degenerate"),
            ));
        }
        let samples: Vec<Point> = sampling
            .shells
            .iter()
            .flat_map(|&frac| {
                (0..sampling.directions).map(move |m| {
                    let a = std::f64::consts::TAU * m as f64 / sampling.directions as f64;
                    x0 + Point::new(a.cos(), a.sin()) * (r * frac)
                })
            })
            .collect();
        let ratios = samples
            .par_iter()
            .map(|b| -> Result<f64> {
                let s = (b - x0).norm();
                let end = advect(u, b, 0.0, sub.t_end(), sub.steps())?;
                let d = separation(u, &center_end, &end);
                Ok(((1.0 / s).ln() / (1.0 / d).ln()).powf(gamma))
            })
            .collect::<Result<Vec<_>>>()?;
        let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
        rows.push(LogRatioRow {
            r,
            min_ratio,
            max_ratio,
            worst_deviation: (max_ratio - 1.0).max(1.0 - min_ratio),
            envelope_lower: (1.0 + log_mu / log_inv_r).powf(-gamma),
            envelope_upper: (1.0 - log_mu / log_inv_r).powf(-gamma),
        });
    }
    Ok(rows)
}
