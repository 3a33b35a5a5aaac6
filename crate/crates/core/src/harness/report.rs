use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::{Error, Result};

/// Version of the `report.json` layout.
pub const SCHEMA_VERSION: u32 = 1;

/// A named numeric table. The first column is the abscissa for plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row; non-finite entries are stored as `f64::MAX` with the sign kept.
    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width for series {}", self.name);
        self.rows.push(
            row.into_iter()
                .map(|v| {
                    if v.is_finite() {
                        v
                    } else if v.is_nan() {
                        f64::MAX
                    } else {
                        f64::MAX.copysign(v)
                    }
                })
                .collect(),
        );
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Pass,
    Fail,
    Indeterminate,
}

/// A single cell of a series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRef {
    pub series: String,
    pub column: String,
    pub row: usize,
}

/// Threshold rules evaluated against stored series, so that verdicts can be
/// recomputed from a persisted report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    /// Every value `<= threshold`.
    AtMost {
        series: String,
        column: String,
        threshold: f64,
    },
    /// Every value `>= threshold`.
    AtLeast {
        series: String,
        column: String,
        threshold: f64,
    },
    /// Every value `> threshold`.
    Above {
        series: String,
        column: String,
        threshold: f64,
    },
    /// Per row: `lower (1 - slack) <= low` and `high <= upper (1 + slack)`.
    Within {
        series: String,
        low: String,
        high: String,
        lower: String,
        upper: String,
        slack: f64,
    },
    /// `|value[row] - expected| <= tolerance |expected|`.
    Near {
        cell: CellRef,
        expected: f64,
        tolerance: f64,
    },
    /// Successive differences exceed the noise floor stored in `noise`.
    IncreasingBeyond {
        series: String,
        column: String,
        noise: CellRef,
    },
    /// Successive values decrease strictly; pairs already at or below
    /// `floor` count as settled at zero.
    StrictlyDecreasing {
        series: String,
        column: String,
        floor: f64,
    },
}

/// Rows whose guard flag is not 1 make the verdict indeterminate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Guard {
    pub series: String,
    pub column: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub outcome: Outcome,
    /// The quantity compared against the threshold (worst case over rows).
    pub measured: f64,
    pub rule: Rule,
    pub guard: Option<Guard>,
}

fn lookup<'a>(series: &'a [Series], name: &str) -> Result<&'a Series> {
    series
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::Format {
            what: "report",
            reason: format!("verdict references missing series `{name}`"),
        })
}

fn col(series: &[Series], s: &str, c: &str) -> Result<Vec<f64>> {
    lookup(series, s)?.column(c).ok_or_else(|| Error::Format {
        what: "report",
        reason: format!("series `{s}` has no column `{c}`"),
    })
}

fn cell(series: &[Series], r: &CellRef) -> Result<f64> {
    col(series, &r.series, &r.column)?
        .get(r.row)
        .copied()
        .ok_or_else(|| Error::Format {
            what: "report",
            reason: format!("series `{}` has no row {}", r.series, r.row),
        })
}

fn worst(values: impl IntoIterator<Item = f64>, larger_is_worse: bool) -> f64 {
    let it = values.into_iter();
    if larger_is_worse {
        it.fold(f64::NEG_INFINITY, f64::max)
    } else {
        it.fold(f64::INFINITY, f64::min)
    }
}

impl Rule {
    /// `(passes, measured)`.
    pub fn evaluate(&self, series: &[Series]) -> Result<(bool, f64)> {
        Ok(match self {
            Rule::AtMost {
                series: s,
                column,
                threshold,
            } => {
                let m = worst(col(series, s, column)?, true);
                (m <= *threshold, m)
            }
            Rule::AtLeast {
                series: s,
                column,
                threshold,
            } => {
                let m = worst(col(series, s, column)?, false);
                (m >= *threshold, m)
            }
            Rule::Above {
                series: s,
                column,
                threshold,
            } => {
                let m = worst(col(series, s, column)?, false);
                (m > *threshold, m)
            }
            Rule::Within {
                series: s,
                low,
                high,
                lower,
                upper,
                slack,
            } => {
                let (lo, hi) = (col(series, s, low)?, col(series, s, high)?);
                let (lb, ub) = (col(series, s, lower)?, col(series, s, upper)?);
                // Measured: largest relative excursion beyond a bound (<= slack passes).
                let mut m = f64::NEG_INFINITY;
                for i in 0..lo.len() {
                    let below = (lb[i] - lo[i]) / lb[i].abs().max(f64::MIN_POSITIVE);
                    let above = (hi[i] - ub[i]) / ub[i].abs().max(f64::MIN_POSITIVE);
                    m = m.max(below).max(above);
                }
                (m <= *slack, m)
            }
            Rule::Near {
                cell: c,
                expected,
                tolerance,
            } => {
                let v = cell(series, c)?;
                let rel = (v - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
                (rel <= *tolerance, rel)
            }
            Rule::IncreasingBeyond {
                series: s,
                column,
                noise,
            } => {
                let v = col(series, s, column)?;
                let floor = cell(series, noise)?;
                let m = worst(v.windows(2).map(|w| w[1] - w[0] - floor), false);
                (v.len() >= 2 && m > 0.0, m)
            }
            Rule::StrictlyDecreasing {
                series: s,
                column,
                floor,
            } => {
                let v = col(series, s, column)?;
                let diffs: Vec<f64> = v
                    .windows(2)
                    .filter(|w| !(w[0] <= *floor && w[1] <= *floor))
                    .map(|w| w[1] - w[0])
                    .collect();
                if diffs.is_empty() {
                    (v.len() >= 2, 0.0)
                } else {
                    let m = worst(diffs, true);
                    (m < 0.0, m)
                }
            }
        })
    }
}

impl Verdict {
    pub fn evaluate(name: impl Into<String>, rule: Rule, guard: Option<Guard>, series: &[Series]) -> Result<Self> {
        let (passes, measured) = rule.evaluate(series)?;
        let guarded = match &guard {
            Some(g) => col(series, &g.series, &g.column)?.iter().all(|&f| f == 1.0),
            None => true,
        };
        let outcome = if !guarded {
            Outcome::Indeterminate
        } else if passes {
            Outcome::Pass
        } else {
            Outcome::Fail
        };
        Ok(Self {
            name: name.into(),
            outcome,
            measured,
            rule,
            guard,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub elapsed_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub series: Vec<Series>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    pub wall_clock: WallClock,
}

impl Report {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: crate::VERSION.to_string(),
            kind: config.kind,
            seed: config.seed,
            config: config.clone(),
            series: Vec::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
            wall_clock: WallClock::default(),
        }
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    /// Evaluates `rule` against the current series and stores the verdict.
    pub fn judge(&mut self, name: impl Into<String>, rule: Rule, guard: Option<Guard>) -> Result<()> {
        let v = Verdict::evaluate(name, rule, guard, &self.series)?;
        self.verdicts.push(v);
        Ok(())
    }

    /// FAIL dominates INDETERMINATE, which dominates PASS.
    pub fn overall(&self) -> Outcome {
        let has = |o| self.verdicts.iter().any(|v| v.outcome == o);
        if has(Outcome::Fail) {
            Outcome::Fail
        } else if has(Outcome::Indeterminate) {
            Outcome::Indeterminate
        } else {
            Outcome::Pass
        }
    }

    /// Verdicts re-derived from the stored series and rules.
    pub fn recompute_verdicts(&self) -> Result<Vec<Verdict>> {
        self.verdicts
            .iter()
            .map(|v| Verdict::evaluate(v.name.clone(), v.rule.clone(), v.guard.clone(), &self.series))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format {
            what: "report",
            reason: e.to_string(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format {
            what: "report",
            reason: e.to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// One `x y` file of the plot bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotEntry {
    pub file: String,
    pub series: String,
    pub x: String,
    pub y: String,
}

struct Writer {
    written: Vec<PathBuf>,
}

impl Writer {
    fn write(&mut self, path: PathBuf, contents: &str) -> Result<()> {
        match fs::write(&path, contents) {
            Ok(()) => {
                self.written.push(path);
                Ok(())
            }
            Err(source) => Err(Error::Io {
                path,
                written: std::mem::take(&mut self.written),
                source,
            }),
        }
    }

    fn mkdir(&mut self, path: &Path) -> Result<()> {
        fs::create_dir_all(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            written: std::mem::take(&mut self.written),
            source,
        })
    }
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

fn plot_bundle(report: &Report, dir: &Path, w: &mut Writer) -> Result<()> {
    let plots = dir.join("plots");
    w.mkdir(&plots)?;
    let mut index = Vec::new();
    for s in &report.series {
        if s.columns.len() < 2 {
            continue;
        }
        for (j, y) in s.columns.iter().enumerate().skip(1) {
            let file = format!("{}__{}.dat", file_stem(&s.name), file_stem(y));
            let mut text = format!("# x: {}\n# y: {}\n", s.columns[0], y);
            for r in &s.rows {
                text.push_str(&format!("{} {}\n", r[0], r[j]));
            }
            w.write(plots.join(&file), &text)?;
            index.push(PlotEntry {
                file,
                series: s.name.clone(),
                x: s.columns[0].clone(),
                y: y.clone(),
            });
        }
    }
    let json = serde_json::to_string_pretty(&index).expect("plot index serializes");
    w.write(plots.join("index.json"), &json)
}

/// Writes `report.json`, one CSV per series and the `plots/` bundle.
/// On failure the error lists the files already written.
pub fn write_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut w = Writer { written: Vec::new() };
    w.mkdir(dir)?;
    w.write(dir.join("report.json"), &report.to_json()?)?;
    for s in &report.series {
        w.write(dir.join(format!("{}.csv", file_stem(&s.name))), &s.to_csv())?;
    }
    plot_bundle(report, dir, &mut w)?;
    Ok(w.written)
}

/// Regenerates only the plot bundle of a persisted report.
pub fn write_plot_bundle(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut w = Writer { written: Vec::new() };
    plot_bundle(report, dir, &mut w)?;
    Ok(w.written)
}
