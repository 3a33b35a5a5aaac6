//! Experiment orchestration and reports.
//!
//! Each experiment kind implements [`Experiment`] and is looked up by the
//! `kind` key of the config. Runs produce a [`Report`] whose verdicts are
//! threshold [`Rule`]s over stored series, so a persisted report can be
//! re-judged offline with [`Report::recompute_verdicts`].

mod attach;
mod euler_growth;
mod report;
mod transport_runs;

use std::time::Instant;

pub use report::{
    write_plot_bundle, write_report, CellRef, Guard, Outcome, PlotEntry, Report, Rule, Series,
    Verdict, WallClock, SCHEMA_VERSION,
};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::{Error, Result};

pub trait Experiment: Send + Sync {
    fn kind(&self) -> ExperimentKind;

    fn summary(&self) -> &'static str;

    /// Runs a validated config of this kind.
    fn run(&self, cfg: &ExperimentConfig) -> Result<Report>;
}

struct Preservation;
struct Sandwich;
struct EulerGrowth;
struct FlowDiagnostics;

impl Experiment for Preservation {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::Preservation
    }
    fn summary(&self) -> &'static str {
        "pointwise coefficient of transported data against its initial value"
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<Report> {
        transport_runs::run(cfg)
    }
}

impl Experiment for Sandwich {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::Sandwich
    }
    fn summary(&self) -> &'static str {
        "transported Holder coefficient against the exp(+-beta I) bounds"
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<Report> {
        transport_runs::run(cfg)
    }
}

impl Experiment for EulerGrowth {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::EulerGrowth
    }
    fn summary(&self) -> &'static str {
        "2D Euler from odd-odd cusp data: Holder growth and log-Holder preservation at the origin"
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<Report> {
        euler_growth::run(cfg)
    }
}

impl Experiment for FlowDiagnostics {
    fn kind(&self) -> ExperimentKind {
        ExperimentKind::FlowDiagnostics
    }
    fn summary(&self) -> &'static str {
        "bi-Lipschitz pair separations and log-ratio envelopes of a flow map"
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<Report> {
        let mut report = Report::new(cfg);
        let u = cfg.velocity_field()?;
        let tg = cfg.time.grid()?;
        attach::budget(&mut report, u.as_ref(), &tg)?;
        if cfg.pairs.is_some() {
            attach::pairs(&mut report, cfg, u.as_ref(), &tg)?;
        }
        if cfg.log_ratio.is_some() {
            attach::log_ratio(&mut report, cfg, u.as_ref(), &tg)?;
        }
        Ok(report)
    }
}

/// All registered experiment kinds.
pub fn experiment_catalog() -> Vec<Box<dyn Experiment>> {
    vec![
        Box::new(Preservation),
        Box::new(Sandwich),
        Box::new(EulerGrowth),
        Box::new(FlowDiagnostics),
    ]
}

/// Validates the config, runs the matching experiment and stamps the wall clock.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let catalog = experiment_catalog();
    let exp = catalog
        .iter()
        .find(|e| e.kind() == cfg.kind)
        .expect("every kind is registered");
    let mut report = exp.run(cfg)?;
    report.wall_clock.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn run_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<Report> {
    if cfg.kind != kind {
        return Err(Error::Config(format!(
            "expected kind = \"{}\", found \"{}\"",
            kind.name(),
            cfg.kind.name()
        )));
    }
    run_experiment(cfg)
}

pub fn run_preservation_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    run_kind(cfg, ExperimentKind::Preservation)
}

pub fn run_sandwich_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    run_kind(cfg, ExperimentKind::Sandwich)
}

pub fn run_euler_growth_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    run_kind(cfg, ExperimentKind::EulerGrowth)
}

pub fn run_flow_diagnostics(cfg: &ExperimentConfig) -> Result<Report> {
    run_kind(cfg, ExperimentKind::FlowDiagnostics)
}

/// Runs `f` on a pool of `jobs` workers (0 selects all available cores).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("jobs: {e}")))?;
    Ok(pool.install(f))
}
