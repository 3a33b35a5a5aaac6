use std::sync::Arc;

use super::{attach, CellRef, Guard, Report, Rule, Series};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::fields::scalar_catalog;
use crate::modcont::{sampler_catalog, Convergence};
use crate::transport::{preservation_curve, EstimatorSettings, TransportProblem};
use crate::{Point, Result};

/// Preservation and sandwich runs share one loop over the exponent sweep.
pub(super) fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(cfg);
    let u = cfg.velocity_field()?;
    let tg = cfg.time.grid()?;
    let mc = cfg.modulus_config()?;
    let radii = cfg.estimation_radii()?;
    let sampler = sampler_catalog().build(&cfg.sampler)?;
    let center = Point::new(cfg.center[0], cfg.center[1]);
    let sandwich = cfg.kind == ExperimentKind::Sandwich;
    let param = mc.family.exponent_param();

    attach::budget(&mut report, u.as_ref(), &tg)?;
    let mut widths = Vec::new();

    for &e in &mc.exponents {
        let modulus = mc.family.build(e)?;
        let data = scalar_catalog().build(&cfg.data_for(e)?)?;
        let known = data
            .known_coefficient()
            .filter(|k| k.modulus == modulus && k.center == center)
            .map(|k| k.value);
        let problem = TransportProblem::new(
            Arc::clone(&u),
            data,
            center,
            modulus,
            tg,
            EstimatorSettings {
                radii: radii.clone(),
                sampler: Arc::clone(&sampler),
                plateau_tol: cfg.tolerances.plateau,
            },
        )?;
        let records = preservation_curve(&problem, &cfg.time.outputs)?;

        let name = format!("records_{param}_{e}");
        let mut columns = vec![
            "t",
            "x1",
            "x2",
            "estimate",
            "initial",
            "ratio",
            "gap",
            "slope",
            "mu_t",
            "local_integral",
            "converged",
        ];
        if modulus.is_holder() {
            columns.extend(["lower_bound", "upper_bound"]);
        }
        let mut s = Series::new(&name, &columns);
        for r in &records {
            let mut row = vec![
                r.t,
                r.position[0],
                r.position[1],
                r.estimate,
                r.initial,
                r.estimate / r.initial.max(f64::EPSILON),
                r.gap,
                r.slope,
                r.mu,
                r.local_integral,
                f64::from(u8::from(r.convergence == Convergence::Converged)),
            ];
            if let (Some(lo), Some(hi)) = (r.lower_bound, r.upper_bound) {
                row.extend([lo, hi]);
            }
            s.push(row);
        }
        report.series.push(s);

        let guard = Some(Guard {
            series: name.clone(),
            column: "converged".into(),
        });
        let label = format!("{param}={e}");
        if sandwich {
            report.judge(
                format!("sandwich[{label}]"),
                Rule::Within {
                    series: name.clone(),
                    low: "estimate".into(),
                    high: "estimate".into(),
                    lower: "lower_bound".into(),
                    upper: "upper_bound".into(),
                    slack: cfg.tolerances.slack,
                },
                guard,
            )?;
            if let Some(last) = records.last() {
                if let (Some(lo), Some(hi)) = (last.lower_bound, last.upper_bound) {
                    widths.push((e, (hi - lo) / last.initial.max(f64::EPSILON)));
                }
            }
        } else {
            report.judge(
                format!("gap[{label}]"),
                Rule::AtMost {
                    series: name.clone(),
                    column: "gap".into(),
                    threshold: cfg.tolerances.gap,
                },
                guard,
            )?;
        }
        if let Some(expected) = known {
            report.judge(
                format!("initial[{label}]"),
                Rule::Near {
                    cell: CellRef {
                        series: name.clone(),
                        column: "initial".into(),
                        row: 0,
                    },
                    expected,
                    tolerance: cfg.tolerances.initial,
                },
                None,
            )?;
        }
        if let Some(expected) = cfg.tolerances.final_ratio {
            report.judge(
                format!("final_ratio[{label}]"),
                Rule::Near {
                    cell: CellRef {
                        series: name.clone(),
                        column: "ratio".into(),
                        row: records.len() - 1,
                    },
                    expected,
                    tolerance: cfg.tolerances.final_ratio_tol,
                },
                None,
            )?;
        }
    }

    if sandwich && widths.len() > 1 {
        widths.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut s = Series::new("sandwich_width", &[param, "relative_width"]);
        for (e, w) in widths {
            s.push(vec![e, w]);
        }
        report.series.push(s);
        report.judge(
            "width_shrinks_as_exponent_decreases",
            Rule::StrictlyDecreasing {
                series: "sandwich_width".into(),
                column: "relative_width".into(),
                floor: 0.0,
            },
            None,
        )?;
    }

    if cfg.pairs.is_some() {
        attach::pairs(&mut report, cfg, u.as_ref(), &tg)?;
    }
    if cfg.log_ratio.is_some() {
        attach::log_ratio(&mut report, cfg, u.as_ref(), &tg)?;
    }
    Ok(report)
}
