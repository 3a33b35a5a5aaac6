//! Experiment configuration: one TOML document per run.
//!
//! Parsing rejects unknown keys, and [`ExperimentConfig::validate`] checks
//! every numerical precondition up front so that a run never fails halfway on
//! a bad parameter. See `configs/` at the repository root for examples.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::euler2d::{bahouri_chemin_init, EulerSolver, CFL_LIMIT};
use crate::fields::{scalar_catalog, velocity_catalog, Grid2, VelocityField};
use crate::flow::{lipschitz_budget, TimeGrid};
use crate::modcont::{geometric_radii, sampler_catalog, ModulusFamily, S_MAX};
use crate::registry::CatalogSpec;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Preservation,
    Sandwich,
    EulerGrowth,
    FlowDiagnostics,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Preservation => "preservation",
            Self::Sandwich => "sandwich",
            Self::EulerGrowth => "euler_growth",
            Self::FlowDiagnostics => "flow_diagnostics",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Holder,
    LogHolder,
}

impl FamilyName {
    pub fn build(&self, exponent: f64) -> Result<ModulusFamily> {
        match self {
            Self::Holder => ModulusFamily::holder(exponent),
            Self::LogHolder => ModulusFamily::log_holder(exponent),
        }
    }

    /// Name of the exponent parameter shared with initial-data catalog entries.
    pub fn exponent_param(&self) -> &'static str {
        match self {
            Self::Holder => "beta",
            Self::LogHolder => "gamma",
        }
    }
}

/// Modulus family plus the exponents to sweep over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulusConfig {
    pub family: FamilyName,
    pub exponents: Vec<f64>,
    /// Copy each exponent into the initial data's `beta`/`gamma` parameter.
    #[serde(default = "yes")]
    pub link_data: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    pub dt: f64,
    /// Output times; each must be a node of the time grid.
    pub outputs: Vec<f64>,
}

impl TimeConfig {
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t_end, self.dt)
    }
}

/// Either an explicit list or a geometric ladder `r_max, r_max q, ...` down to `r_min`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiiConfig {
    pub values: Option<Vec<f64>>,
    pub r_max: Option<f64>,
    pub r_min: Option<f64>,
    pub ratio: Option<f64>,
}

impl RadiiConfig {
    pub fn ladder(r_max: f64, r_min: f64, ratio: f64) -> Self {
        Self {
            values: None,
            r_max: Some(r_max),
            r_min: Some(r_min),
            ratio: Some(ratio),
        }
    }

    pub fn resolve(&self) -> Result<Vec<f64>> {
        let radii = match (&self.values, self.r_max, self.r_min) {
            (Some(v), None, None) if self.ratio.is_none() => v.clone(),
            (None, Some(hi), Some(lo)) => geometric_radii(hi, lo, self.ratio.unwrap_or(0.5))?,
            _ => {
                return Err(Error::Config(
                    "radii: give either `values` or `r_max` and `r_min` (with optional `ratio`)"
                        .into(),
                ))
            }
        };
        check_radii(&radii)?;
        Ok(radii)
    }
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::Config("radii: list is empty".into()));
    }
    for &r in radii {
        if !(r > 0.0 && r <= S_MAX) {
            return Err(Error::Config(format!(
                "radii: {r} violates the modcont bound 0 < r <= s_max = {S_MAX}"
            )));
        }
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("radii: must be strictly decreasing".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Largest relative gap `|est(t) - est(0)| / est(0)`.
    pub gap: f64,
    /// Plateau slope threshold of the estimator.
    pub plateau: f64,
    /// Relative slack on the sandwich and bi-Lipschitz bounds.
    pub slack: f64,
    /// Relative tolerance of `est(0)` against a known coefficient.
    pub initial: f64,
    /// Relative tolerance of the log-ratio envelope check.
    pub envelope: f64,
    /// Absolute tolerance on `mu(T)` under time-step refinement.
    pub refinement: f64,
    /// Expected `est(T) / est(0)`, if asserted.
    pub final_ratio: Option<f64>,
    pub final_ratio_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gap: 0.05,
            plateau: 0.01,
            slack: 0.01,
            initial: 0.02,
            envelope: 1e-9,
            refinement: 1e-6,
            final_ratio: None,
            final_ratio_tol: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EulerConfig {
    pub n: usize,
    #[serde(default = "pi")]
    pub half_period: f64,
    pub beta: f64,
    /// Log-Holder exponent tracked alongside the Holder coefficient.
    #[serde(default = "half")]
    pub log_gamma: f64,
    /// Seeds `(r, 2r)` of the tracked trajectories.
    #[serde(default)]
    pub seeds: Vec<f64>,
    /// Largest estimation radius.
    #[serde(default = "s_max")]
    pub r_max: f64,
    /// Smallest estimation radius in grid spacings.
    #[serde(default = "eight")]
    pub min_radius_cells: f64,
    #[serde(default = "ladder_ratio")]
    pub ratio: f64,
    /// Inner cutoff of the origin-strain sum in grid spacings.
    #[serde(default = "two")]
    pub strain_cutoff_cells: f64,
    /// Start from zero vorticity (control run).
    #[serde(default)]
    pub zero_data: bool,
    /// Tolerance on the log-Holder gap.
    #[serde(default = "fifteen_percent")]
    pub log_gap: f64,
}

impl EulerConfig {
    pub fn grid(&self) -> Result<Grid2> {
        Grid2::new(self.n, self.half_period)
    }

    pub fn radii(&self) -> Result<Vec<f64>> {
        let g = self.grid()?;
        if self.min_radius_cells < 4.0 {
            return Err(Error::Config(
                "euler.min_radius_cells: radii below 4 grid spacings are not resolved".into(),
            ));
        }
        let radii = geometric_radii(self.r_max, self.min_radius_cells * g.spacing(), self.ratio)?;
        check_radii(&radii)?;
        Ok(radii)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub count: usize,
    /// Largest initial separation; at most `L/4` for periodic fields.
    pub max_separation: f64,
    /// First points are drawn uniformly from `[-w, w]^2`.
    #[serde(default = "pi")]
    pub box_half_width: f64,
    /// Time-step refinement factor for the `mu(T)` stability check.
    #[serde(default = "ten")]
    pub refine: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRatioConfig {
    pub t: f64,
    pub gamma: f64,
    /// Radii `e^-k` for `k = k_min..=k_max`.
    pub k_min: u32,
    pub k_max: u32,
    #[serde(default = "directions")]
    pub directions: usize,
}

impl LogRatioConfig {
    pub fn radii(&self) -> Vec<f64> {
        (self.k_min..=self.k_max).map(|k| (-(k as f64)).exp()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads; 0 means all available cores.
    #[serde(default, skip_serializing)]
    pub jobs: usize,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub center: [f64; 2],
    #[serde(default = "zero_velocity")]
    pub velocity: CatalogSpec,
    pub data: Option<CatalogSpec>,
    pub modulus: Option<ModulusConfig>,
    pub time: TimeConfig,
    pub radii: Option<RadiiConfig>,
    #[serde(default = "default_sampler")]
    pub sampler: CatalogSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub euler: Option<EulerConfig>,
    pub pairs: Option<PairConfig>,
    pub log_ratio: Option<LogRatioConfig>,
}

fn yes() -> bool {
    true
}
fn pi() -> f64 {
    PI
}
fn half() -> f64 {
    0.5
}
fn two() -> f64 {
    2.0
}
fn eight() -> f64 {
    8.0
}
fn s_max() -> f64 {
    S_MAX
}
fn ladder_ratio() -> f64 {
    0.85
}
fn fifteen_percent() -> f64 {
    0.15
}
fn ten() -> usize {
    10
}
fn directions() -> usize {
    360
}
fn default_seed() -> u64 {
    0
}
fn zero_velocity() -> CatalogSpec {
    CatalogSpec::new("zero")
}
fn default_sampler() -> CatalogSpec {
    CatalogSpec::new("direction_sweep")
}

impl ExperimentConfig {
    pub fn velocity_field(&self) -> Result<std::sync::Arc<dyn VelocityField>> {
        velocity_catalog().build(&self.velocity)
    }

    pub fn modulus_config(&self) -> Result<&ModulusConfig> {
        self.modulus
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{} requires a [modulus] table", self.kind.name())))
    }

    pub fn data_spec(&self) -> Result<&CatalogSpec> {
        self.data
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{} requires a [data] table", self.kind.name())))
    }

    pub fn euler_config(&self) -> Result<&EulerConfig> {
        self.euler
            .as_ref()
            .ok_or_else(|| Error::Config("euler_growth requires an [euler] table".into()))
    }

    /// Initial-data spec for one sweep exponent.
    pub fn data_for(&self, exponent: f64) -> Result<CatalogSpec> {
        let m = self.modulus_config()?;
        let mut spec = self.data_spec()?.clone();
        if m.link_data {
            let name = m.family.exponent_param();
            let declares = scalar_catalog()
                .describe()
                .into_iter()
                .find(|e| e.name == spec.kind)
                .is_some_and(|e| e.params.iter().any(|p| p.name == name));
            if declares {
                spec.params.insert(name.to_string(), exponent);
            }
        }
        Ok(spec)
    }

    pub fn estimation_radii(&self) -> Result<Vec<f64>> {
        self.radii
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{} requires a [radii] table", self.kind.name())))?
            .resolve()
    }

    /// Checks every precondition of the selected experiment.
    pub fn validate(&self) -> Result<()> {
        let ctx = |key: &str, e: Error| Error::Config(format!("{key}: {e}"));
        let tg = self.time.grid().map_err(|e| ctx("time", e))?;
        for &t in &self.time.outputs {
            if t < 0.0 {
                return Err(Error::Config(format!("time.outputs: {t} is negative")));
            }
            tg.node_index(t)
                .map_err(|_| Error::Config(format!("time.outputs: {t} is not a multiple of dt within [0, t_end]")))?;
        }
        if self.time.outputs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("time.outputs: must be strictly increasing".into()));
        }
        let tol = &self.tolerances;
        for (name, v) in [
            ("gap", tol.gap),
            ("plateau", tol.plateau),
            ("initial", tol.initial),
            ("envelope", tol.envelope),
            ("refinement", tol.refinement),
            ("final_ratio_tol", tol.final_ratio_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerances.{name}: must be positive")));
            }
        }
        if !(tol.slack >= 0.0) {
            return Err(Error::Config("tolerances.slack: must be non-negative".into()));
        }
        if !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::Config("center: must be finite".into()));
        }
        let u = self.velocity_field().map_err(|e| ctx("velocity", e))?;
        match self.kind {
            ExperimentKind::Preservation | ExperimentKind::Sandwich => {
                self.validate_transport(u.as_ref(), &tg)
            }
            ExperimentKind::EulerGrowth => self.validate_euler(),
            ExperimentKind::FlowDiagnostics => self.validate_flow(u.as_ref(), &tg),
        }
    }

    fn validate_transport(&self, u: &dyn VelocityField, tg: &TimeGrid) -> Result<()> {
        let m = self.modulus_config()?;
        if m.exponents.is_empty() {
            return Err(Error::Config("modulus.exponents: list is empty".into()));
        }
        if self.kind == ExperimentKind::Sandwich && m.family != FamilyName::Holder {
            return Err(Error::Config("sandwich requires modulus.family = \"holder\"".into()));
        }
        for &e in &m.exponents {
            m.family
                .build(e)
                .map_err(|err| Error::Config(format!("modulus.exponents: {err}")))?;
            let spec = self.data_for(e)?;
            scalar_catalog()
                .build(&spec)
                .map_err(|err| Error::Config(format!("data: {err}")))?;
        }
        sampler_catalog()
            .build(&self.sampler)
            .map_err(|e| Error::Config(format!("sampler: {e}")))?;
        let radii = self.estimation_radii()?;
        if radii.len() < 4 {
            return Err(Error::Config(format!(
                "radii: the estimator needs at least 4 radii, got {}",
                radii.len()
            )));
        }
        if self.time.outputs.is_empty() {
            return Err(Error::Config("time.outputs: list is empty".into()));
        }
        let last = *self.time.outputs.last().expect("non-empty");
        if last > 0.0 {
            let sub = tg.up_to(last)?;
            let mu = lipschitz_budget(u, &sub, None)?.mu_end();
            if mu * radii[0] > S_MAX * (1.0 + 1e-12) {
                return Err(Error::Config(format!(
                    "radii: mu(t) * r_max = {:.4} exceeds s_max = {S_MAX}; lower r_max below {:.4}",
                    mu * radii[0],
                    S_MAX / mu
                )));
            }
        }
        if let Some(lr) = &self.log_ratio {
            self.validate_log_ratio(lr, u, tg)?;
        }
        if let Some(p) = &self.pairs {
            self.validate_pairs(p, u)?;
        }
        Ok(())
    }

    fn validate_euler(&self) -> Result<()> {
        let e = self.euler_config()?;
        let g = e.grid().map_err(|err| Error::Config(format!("euler: {err}")))?;
        if !(e.beta > 0.0 && e.beta <= 1.0) {
            return Err(Error::Config("euler.beta: holder requires 0 < β ≤ 1".into()));
        }
        ModulusFamily::log_holder(e.log_gamma)
            .map_err(|err| Error::Config(format!("euler.log_gamma: {err}")))?;
        let radii = e.radii().map_err(|err| Error::Config(format!("euler radii: {err}")))?;
        if radii.len() < 4 {
            return Err(Error::Config(format!(
                "euler radii: r_max = {} down to {} grid spacings gives {} radii; the estimator needs 4",
                e.r_max,
                e.min_radius_cells,
                radii.len()
            )));
        }
        if e.strain_cutoff_cells < 2.0 {
            return Err(Error::Config("euler.strain_cutoff_cells: must be at least 2".into()));
        }
        if e.seeds.iter().any(|&r| !(r > 0.0 && 2.0 * r < g.half_period())) {
            return Err(Error::Config("euler.seeds: each r needs 0 < 2r < L".into()));
        }
        if !(e.log_gap > 0.0) {
            return Err(Error::Config("euler.log_gap: must be positive".into()));
        }
        if self.time.outputs.len() < 2 {
            return Err(Error::Config("time.outputs: growth needs at least two output times".into()));
        }
        if !e.zero_data {
            let s = bahouri_chemin_init(e.beta, g).map_err(|err| Error::Config(format!("euler: {err}")))?;
            let cfl = EulerSolver::new(g).cfl(&s, self.time.dt);
            if cfl > CFL_LIMIT {
                return Err(Error::Config(format!(
                    "time.dt: initial CFL number {cfl:.3} exceeds {CFL_LIMIT}; reduce dt below {:.3e}",
                    self.time.dt * CFL_LIMIT / cfl
                )));
            }
        }
        Ok(())
    }

    fn validate_flow(&self, u: &dyn VelocityField, tg: &TimeGrid) -> Result<()> {
        if self.pairs.is_none() && self.log_ratio.is_none() {
            return Err(Error::Config(
                "flow_diagnostics requires a [pairs] or [log_ratio] table".into(),
            ));
        }
        if let Some(p) = &self.pairs {
            self.validate_pairs(p, u)?;
        }
        if let Some(lr) = &self.log_ratio {
            self.validate_log_ratio(lr, u, tg)?;
        }
        Ok(())
    }

    fn validate_pairs(&self, p: &PairConfig, u: &dyn VelocityField) -> Result<()> {
        if p.count == 0 || p.refine == 0 {
            return Err(Error::Config("pairs: count and refine must be positive".into()));
        }
        if !(p.max_separation > 0.0 && p.box_half_width > 0.0) {
            return Err(Error::Config("pairs: separations and box must be positive".into()));
        }
        if let Some(l) = u.half_period() {
            if p.max_separation > l / 4.0 {
                return Err(Error::Config(format!(
                    "pairs.max_separation: {} exceeds L/4 = {} for a periodic field",
                    p.max_separation,
                    l / 4.0
                )));
            }
        }
        Ok(())
    }

    fn validate_log_ratio(&self, lr: &LogRatioConfig, u: &dyn VelocityField, tg: &TimeGrid) -> Result<()> {
        ModulusFamily::log_holder(lr.gamma)
            .map_err(|e| Error::Config(format!("log_ratio.gamma: {e}")))?;
        if lr.k_max < lr.k_min || lr.directions == 0 {
            return Err(Error::Config("log_ratio: need k_min <= k_max and directions > 0".into()));
        }
        if (-(lr.k_min as f64)).exp() > S_MAX {
            return Err(Error::Config(format!(
                "log_ratio.k_min: e^-k must not exceed s_max = {S_MAX}"
            )));
        }
        let sub = tg
            .up_to(lr.t)
            .map_err(|e| Error::Config(format!("log_ratio.t: {e}")))?;
        let log_mu = lipschitz_budget(u, &sub, None)?.integral[sub.steps()];
        if (lr.k_min as f64) <= log_mu {
            return Err(Error::Config(format!(
                "log_ratio.k_min: log(1/r) = {} must exceed log mu(t) = {log_mu:.4}",
                lr.k_min
            )));
        }
        Ok(())
    }
}

/// Parses and validates a TOML document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_with_overrides(text, &[])
}

/// Parses a TOML document, applies `key.path=value` overrides, then validates.
pub fn parse_config_with_overrides(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| config_error(&e, Some(text)))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    // Re-serialize so that schema errors point at a line of the effective document.
    let effective = toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?;
    let cfg: ExperimentConfig =
        toml::from_str(&effective).map_err(|e| config_error(&e, Some(&effective)))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_with_overrides(&text, overrides)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn config_error(e: &toml::de::Error, text: Option<&str>) -> Error {
    let message = e.message().trim().replace('\n', " ");
    match (e.span(), text) {
        (Some(span), Some(text)) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            Error::Config(format!("line {line}, column {column}: {message}"))
        }
        _ => Error::Config(message),
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{item}`: expected key=value")))?;
    let key = key.trim();
    let value = parse_value(raw.trim());
    let parts: Vec<&str> = key.split('.').collect();
    let (last, path) = parts.split_last().expect("split yields one part");
    let mut cur = table;
    for p in path {
        cur = match cur.get_mut(*p) {
            Some(toml::Value::Table(t)) => t,
            _ => return Err(Error::Config(format!("override `{key}`: no table `{p}` in config"))),
        };
    }
    match cur.get_mut(*last) {
        Some(slot) => {
            *slot = value;
            Ok(())
        }
        None => Err(Error::Config(format!("override `{key}`: key not present in config"))),
    }
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
