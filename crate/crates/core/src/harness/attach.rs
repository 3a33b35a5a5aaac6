//! Flow-map diagnostics shared by several experiment kinds.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Report, Rule, Series};
use crate::config::ExperimentConfig;
use crate::fields::VelocityField;
use crate::flow::{bilipschitz_check, lipschitz_budget, log_ratio_check, LogRatioSampling, TimeGrid};
use crate::{Point, Result};

/// `t, grad_sup, integral, mu_t` on the config's time grid.
pub(super) fn budget(report: &mut Report, u: &dyn VelocityField, tg: &TimeGrid) -> Result<()> {
    let b = lipschitz_budget(u, tg, None)?;
    let mut s = Series::new("budget", &["t", "grad_sup", "integral", "mu_t"]);
    for k in 0..b.times.len() {
        s.push(vec![b.times[k], b.grad_sup[k], b.integral[k], b.mu[k]]);
    }
    report.series.push(s);
    Ok(())
}

/// Seeded random pairs `(a, a + d)` with `0 < |d| <= max_separation`.
pub fn random_pairs(seed: u64, count: usize, half_width: f64, max_separation: f64) -> Vec<(Point, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = Point::new(
                rng.random_range(-half_width..half_width),
                rng.random_range(-half_width..half_width),
            );
            let angle = rng.random_range(0.0..TAU);
            let sep = max_separation * (1.0 - rng.random::<f64>());
            (a, a + Point::new(angle.cos(), angle.sin()) * sep)
        })
        .collect()
}

pub(super) fn pairs(
    report: &mut Report,
    cfg: &ExperimentConfig,
    u: &dyn VelocityField,
    tg: &TimeGrid,
) -> Result<()> {
    let p = cfg.pairs.as_ref().expect("caller checked");
    let slack = cfg.tolerances.slack;
    let pairs = random_pairs(cfg.seed, p.count, p.box_half_width, p.max_separation);
    let rep = bilipschitz_check(u, &pairs, tg, slack)?;
    let mut s = Series::new(
        "pairs",
        &[
            "pair",
            "alpha1",
            "alpha2",
            "beta1",
            "beta2",
            "min_ratio",
            "max_ratio",
            "lower_margin",
            "upper_margin",
        ],
    );
    for (i, ps) in rep.pairs.iter().enumerate() {
        s.push(vec![
            i as f64,
            ps.alpha[0],
            ps.alpha[1],
            ps.beta[0],
            ps.beta[1],
            ps.min_ratio,
            ps.max_ratio,
            ps.lower_margin,
            ps.upper_margin,
        ]);
    }
    report.series.push(s);
    report.judge(
        "bilipschitz_lower",
        Rule::AtLeast {
            series: "pairs".into(),
            column: "lower_margin".into(),
            threshold: 1.0 / (1.0 + slack),
        },
        None,
    )?;
    report.judge(
        "bilipschitz_upper",
        Rule::AtMost {
            series: "pairs".into(),
            column: "upper_margin".into(),
            threshold: 1.0 + slack,
        },
        None,
    )?;

    let mu = lipschitz_budget(u, tg, None)?.mu_end();
    let fine = tg.refined(p.refine);
    let mu_fine = lipschitz_budget(u, &fine, None)?.mu_end();
    let mut r = Series::new("mu_refinement", &["dt", "dt_refined", "mu", "mu_refined", "difference"]);
    r.push(vec![tg.dt(), fine.dt(), mu, mu_fine, (mu - mu_fine).abs()]);
    report.series.push(r);
    report.judge(
        "mu_refinement",
        Rule::AtMost {
            series: "mu_refinement".into(),
            column: "difference".into(),
            threshold: cfg.tolerances.refinement,
        },
        None,
    )
}

pub(super) fn log_ratio(
    report: &mut Report,
    cfg: &ExperimentConfig,
    u: &dyn VelocityField,
    tg: &TimeGrid,
) -> Result<()> {
    let lr = cfg.log_ratio.as_ref().expect("caller checked");
    let center = Point::new(cfg.center[0], cfg.center[1]);
    let sampling = LogRatioSampling {
        directions: lr.directions,
        ..LogRatioSampling::default()
    };
    let rows = log_ratio_check(u, &center, &lr.radii(), lr.t, lr.gamma, tg, &sampling)?;
    let mut s = Series::new(
        "log_ratio",
        &[
            "k",
            "r",
            "min_ratio",
            "max_ratio",
            "worst_deviation",
            "envelope_lower",
            "envelope_upper",
        ],
    );
    for (k, row) in (lr.k_min..=lr.k_max).zip(&rows) {
        s.push(vec![
            k as f64,
            row.r,
            row.min_ratio,
            row.max_ratio,
            row.worst_deviation,
            row.envelope_lower,
            row.envelope_upper,
        ]);
    }
    report.series.push(s);
    report.judge(
        "log_ratio_envelope",
        Rule::Within {
            series: "log_ratio".into(),
            low: "min_ratio".into(),
            high: "max_ratio".into(),
            lower: "envelope_lower".into(),
            upper: "envelope_upper".into(),
            slack: cfg.tolerances.envelope,
        },
        None,
    )?;
    report.judge(
        "log_ratio_decreasing",
        Rule::StrictlyDecreasing {
            series: "log_ratio".into(),
            column: "worst_deviation".into(),
            floor: cfg.tolerances.envelope,
        },
        None,
    )
}
