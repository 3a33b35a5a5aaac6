use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use loghold::config::{load_config, ExperimentConfig};
use loghold::fields::{scalar_catalog, velocity_catalog};
use loghold::harness::{
    experiment_catalog, run_experiment, with_jobs, write_plot_bundle, write_report, Outcome, Report,
};
use loghold::modcont::sampler_catalog;
use loghold::registry::EntryInfo;
use loghold::Error;

/// Only the output directory may come from the environment.
const OUT_ENV: &str = "LOGHOLD_OUT";

#[derive(Parser)]
#[command(name = "loghold", version, about = "Run modulus-of-continuity transport and Euler experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Suppress the per-verdict summary.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more experiment configs and write their reports.
    Run {
        /// Experiment config (TOML); repeat to run several in parallel.
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        /// Output directory (overrides the config and LOGHOLD_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override a config key, e.g. `--set time.dt=0.005`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Worker threads (0 = all cores); overrides the config's `jobs`.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print the catalogs of experiment kinds, velocity fields, initial data and samplers.
    ListScenarios,
    /// Parse and validate a config without running it.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Regenerate CSV and plot-data files from a persisted report.json.
    EmitPlots {
        /// Path to report.json.
        #[arg(long)]
        report: PathBuf,
        /// Destination directory (defaults to the report's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let reason = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("loghold: error: {reason}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8, Error> {
    match &cli.command {
        Command::Run {
            configs,
            out,
            overrides,
            jobs,
        } => run(configs, out.as_deref(), overrides, *jobs, cli.quiet),
        Command::ListScenarios => {
            list_scenarios();
            Ok(0)
        }
        Command::ValidateConfig { config, overrides } => {
            let cfg = load_config(config, overrides)?;
            cfg.validate()?;
            if !cli.quiet {
                println!("{}: ok ({})", config.display(), cfg.kind.name());
            }
            Ok(0)
        }
        Command::EmitPlots { report, out } => {
            let r = Report::read(report)?;
            let dir = match out {
                Some(d) => d.clone(),
                None => report.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            let files = write_plot_bundle(&r, &dir)?;
            if !cli.quiet {
                println!("wrote {} files to {}", files.len(), dir.display());
            }
            Ok(0)
        }
    }
}

fn exit_code(outcome: Outcome) -> u8 {
    match outcome {
        Outcome::Pass => 0,
        Outcome::Indeterminate => 2,
        Outcome::Fail => 3,
    }
}

fn output_root(cli_out: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    cli_out
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(&cfg.name))
}

fn run(
    paths: &[PathBuf],
    out: Option<&Path>,
    overrides: &[String],
    jobs: Option<usize>,
    quiet: bool,
) -> Result<u8, Error> {
    let mut configs = Vec::with_capacity(paths.len());
    for p in paths {
        let mut cfg = load_config(p, overrides)?;
        if let Some(j) = jobs {
            cfg.jobs = j;
        }
        cfg.validate()?;
        configs.push(cfg);
    }
    let nested = configs.len() > 1;
    let threads = jobs.unwrap_or_else(|| configs.iter().map(|c| c.jobs).max().unwrap_or(0));
    let results: Vec<Result<(Report, PathBuf), Error>> = with_jobs(threads, || {
        configs
            .par_iter()
            .map(|cfg| {
                let report = run_experiment(cfg)?;
                let mut dir = output_root(out, cfg);
                if nested {
                    dir = dir.join(&cfg.name);
                }
                std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
                    path: dir.clone(),
                    written: Vec::new(),
                    source: e,
                })?;
                write_report(&report, &dir)?;
                Ok((report, dir))
            })
            .collect()
    })?;

    let mut worst = Outcome::Pass;
    for res in results {
        let (report, dir) = res?;
        let overall = report.overall();
        if !quiet {
            println!("{} [{}] -> {}", report.config.name, report.kind.name(), dir.display());
            for v in &report.verdicts {
                println!("  {:<40} {:?} (measured {:.4e})", v.name, v.outcome, v.measured);
            }
            for n in &report.notes {
                println!("  note: {n}");
            }
            println!("  overall: {overall:?} in {:.1} s", report.wall_clock.elapsed_seconds);
        }
        worst = match (worst, overall) {
            (Outcome::Fail, _) | (_, Outcome::Fail) => Outcome::Fail,
            (Outcome::Indeterminate, _) | (_, Outcome::Indeterminate) => Outcome::Indeterminate,
            _ => Outcome::Pass,
        };
    }
    Ok(exit_code(worst))
}

fn print_entries(title: &str, entries: Vec<EntryInfo>) {
    println!("{title}:");
    for e in entries {
        println!("  {:<18} {}", e.name, e.summary);
        for p in e.params {
            match p.default {
                Some(d) => println!("      {} = {} ({})", p.name, d, p.doc),
                None => println!("      {} (required) ({})", p.name, p.doc),
            }
        }
    }
}

fn list_scenarios() {
    println!("experiment kinds:");
    for e in experiment_catalog() {
        println!("  {:<18} {}", e.kind().name(), e.summary());
    }
    print_entries("velocity fields", velocity_catalog().describe());
    print_entries("initial data", scalar_catalog().describe());
    print_entries("samplers", sampler_catalog().describe());
}
