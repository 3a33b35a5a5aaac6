use super::{CellRef, Report, Rule, Series};
use crate::config::ExperimentConfig;
use crate::euler2d::{
    bahouri_chemin_init, origin_strain_diagnostic, vorticity_coefficient_at_origin,
    vorticity_profile, EulerSolver, EulerState, SymmetryTag,
};
use crate::fields::scalar_catalog;
use crate::modcont::{estimate_coefficient, least_squares_slope, Convergence, GridSampler, ModulusFamily};
use crate::registry::CatalogSpec;
use crate::{Error, Point, Result};

const MAIN: &str = "origin";
const SUMMARY: &str = "summary";

pub(super) fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(cfg);
    let e = cfg.euler_config()?;
    let grid = e.grid()?;
    let radii = e.radii()?;
    let tg = cfg.time.grid()?;
    let holder = ModulusFamily::holder(e.beta)?;
    let log = ModulusFamily::log_holder(e.log_gamma)?;
    let plateau = cfg.tolerances.plateau;
    let solver = EulerSolver::new(grid);
    let mut state = if e.zero_data {
        EulerState::zero(grid, SymmetryTag::ODD_ODD)
    } else {
        bahouri_chemin_init(e.beta, grid)?
    };
    let strain_cutoff = e.strain_cutoff_cells * grid.spacing();

    let mut outputs = cfg
        .time
        .outputs
        .iter()
        .map(|&t| tg.node_index(t))
        .collect::<Result<Vec<_>>>()?;
    outputs.sort_unstable();
    outputs.dedup();

    let mut main = Series::new(
        MAIN,
        &[
            "t",
            "holder",
            "holder_converged",
            "holder_resolution_limited",
            "log_holder",
            "log_gap",
            "strain",
            "origin_value",
            "symmetry_defect",
            "l2_norm",
            "max_speed",
        ],
    );
    let mut tracer_cols = vec!["t".to_string()];
    for i in 0..e.seeds.len() {
        tracer_cols.extend([format!("x1_{i}"), format!("x2_{i}"), format!("radius_{i}")]);
    }
    let tracer_refs: Vec<&str> = tracer_cols.iter().map(String::as_str).collect();
    let mut tracks = Series::new("tracers", &tracer_refs);
    let mut tracers: Vec<Point> = e.seeds.iter().map(|&r| Point::new(r, 2.0 * r)).collect();

    let mut log0 = None;
    let mut cfl_violation = 0.0;
    let mut next = outputs.iter().peekable();
    for k in 0..=tg.steps() {
        if next.peek() == Some(&&k) {
            next.next();
            let h = vorticity_coefficient_at_origin(&state, &holder, &radii, plateau)?;
            let l = vorticity_coefficient_at_origin(&state, &log, &radii, plateau)?;
            let l0 = *log0.get_or_insert(l.value);
            let log_gap = if e.zero_data {
                (l.value - l0).abs()
            } else {
                (l.value - l0).abs() / l0.max(f64::EPSILON)
            };
            main.push(vec![
                tg.node(k),
                h.value,
                f64::from(u8::from(h.convergence == Convergence::Converged)),
                f64::from(u8::from(h.convergence == Convergence::ResolutionLimited)),
                l.value,
                log_gap,
                origin_strain_diagnostic(&state, strain_cutoff)?,
                state.origin_value(),
                state.symmetry_defect(),
                state.l2_norm(),
                solver.max_speed(&state),
            ]);
            let mut row = vec![tg.node(k)];
            for x in &tracers {
                row.extend([x.x, x.y, x.norm()]);
            }
            tracks.push(row);
        }
        if k == tg.steps() || next.peek().is_none() {
            break;
        }
        match solver.step_with_tracers(&state, tg.dt(), &mut tracers) {
            Ok(s) => state = s,
            Err(Error::Cfl { cfl, limit }) => {
                report.notes.push(format!(
                    "stopped at t = {}: CFL number {cfl:.3} exceeds {limit}; reduce time.dt or euler.n",
                    state.t()
                ));
                cfl_violation = cfl;
                break;
            }
            Err(err) => return Err(err),
        }
    }

    let initial_state = if e.zero_data {
        EulerState::zero(grid, SymmetryTag::ODD_ODD)
    } else {
        bahouri_chemin_init(e.beta, grid)?
    };
    let grid_profile = vorticity_profile(&initial_state, &holder, &radii, &GridSampler)?;
    let grid_estimate = estimate_coefficient(&grid_profile, plateau)?.value;
    let holder_series = main.column("holder").unwrap_or_default();
    let times = main.column("t").unwrap_or_default();
    let noise_floor = holder_series
        .first()
        .map_or(0.0, |h0| (h0 - grid_estimate).abs());
    let fitted_rate = if holder_series.len() > 1 && holder_series.iter().all(|&h| h > 0.0) {
        let ln: Vec<f64> = holder_series.iter().map(|h| h.ln()).collect();
        least_squares_slope(&times, &ln)
    } else {
        0.0
    };
    let mut summary = Series::new(
        SUMMARY,
        &["noise_floor", "grid_sampler_initial", "fitted_rate", "cfl_violation", "outputs"],
    );
    summary.push(vec![
        noise_floor,
        grid_estimate,
        fitted_rate,
        cfl_violation,
        holder_series.len() as f64,
    ]);
    report.series.push(main);
    report.series.push(tracks);
    report.series.push(summary);

    let col = |c: &str| (MAIN.to_string(), c.to_string());
    if e.zero_data {
        let (series, column) = col("holder");
        report.judge("holder_stays_zero", Rule::AtMost { series, column, threshold: 0.0 }, None)?;
    } else {
        let expected = scalar_catalog()
            .build(&CatalogSpec::new("bahouri_chemin").with("beta", e.beta))?
            .known_coefficient()
            .map_or(0.5, |k| k.value);
        report.judge(
            "initial",
            Rule::Near {
                cell: CellRef {
                    series: MAIN.into(),
                    column: "holder".into(),
                    row: 0,
                },
                expected,
                tolerance: cfg.tolerances.initial,
            },
            None,
        )?;
        let (series, column) = col("holder");
        report.judge(
            "holder_growth",
            Rule::IncreasingBeyond {
                series,
                column,
                noise: CellRef {
                    series: SUMMARY.into(),
                    column: "noise_floor".into(),
                    row: 0,
                },
            },
            None,
        )?;
        report.judge(
            "growth_rate",
            Rule::Above {
                series: SUMMARY.into(),
                column: "fitted_rate".into(),
                threshold: 0.0,
            },
            None,
        )?;
    }
    let (series, column) = col("log_gap");
    report.judge(
        "log_holder_preserved",
        Rule::AtMost {
            series,
            column,
            threshold: e.log_gap,
        },
        None,
    )?;
    report.judge(
        "cfl",
        Rule::AtMost {
            series: SUMMARY.into(),
            column: "cfl_violation".into(),
            threshold: 0.0,
        },
        None,
    )?;
    Ok(report)
}
