//! End-to-end acceptance checks. Each criterion prints one
//! `criterion N: PASS|FAIL ...` line; the process exits non-zero if any fails.

use std::f64::consts::{E, PI};
use std::path::PathBuf;
use std::time::Instant;

use loghold::config::{load_config, ExperimentConfig};
use loghold::euler2d::{
    bahouri_chemin_init, bahouri_chemin_profile, biot_savart, origin_strain_diagnostic,
    origin_strain_quadrature, vorticity_profile, EulerSolver, EulerState, SymmetryTag,
};
use loghold::fields::{scalar_catalog, Grid2};
use loghold::harness::{run_experiment, write_report, Report, Series};
use loghold::modcont::{estimate_coefficient, GridSampler, ModulusFamily};
use loghold::registry::CatalogSpec;
use loghold::Point;

type Check = Result<String, String>;

fn config(name: &str, overrides: &[&str]) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    load_config(&path, &overrides).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn run(cfg: &ExperimentConfig) -> Result<Report, String> {
    run_experiment(cfg).map_err(|e| format!("{}: {e}", cfg.name))
}

fn series<'a>(r: &'a Report, name: &str) -> Result<&'a Series, String> {
    r.series(name).ok_or_else(|| format!("series {name} missing"))
}

fn column(s: &Series, c: &str) -> Result<Vec<f64>, String> {
    s.column(c).ok_or_else(|| format!("column {c} missing from {}", s.name))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Log-Holder data under linear strain keeps its coefficient.
fn criterion_1() -> Check {
    const GAP: f64 = 0.05;
    const INITIAL: f64 = 0.02;
    let mut worst_gap: f64 = 0.0;
    let mut worst_time: f64 = 0.0;
    let mut floor_gaps = Vec::new();
    for gamma in [0.5, 1.0, 2.0] {
        let set = format!("modulus.exponents=[{gamma}]");
        let cfg = config("log_holder_preservation.toml", &[&set]);
        let start = Instant::now();
        let r = run(&cfg)?;
        let elapsed = start.elapsed().as_secs_f64();
        worst_time = worst_time.max(elapsed);
        ensure(elapsed <= 60.0, || format!("gamma={gamma} took {elapsed:.1} s"))?;
        let s = series(&r, &format!("records_gamma_{gamma}"))?;
        let est = column(s, "estimate")?;
        let times = column(s, "t")?;
        ensure(times == [0.0, 0.25, 0.5, 1.0], || format!("output times {times:?}"))?;
        // The data equal the modulus exactly near the origin.
        ensure((est[0] - 1.0).abs() <= INITIAL, || format!("gamma={gamma}: est(0) = {}", est[0]))?;
        for (t, e) in times.iter().zip(&est) {
            let gap = (e - est[0]).abs() / est[0];
            worst_gap = worst_gap.max(gap);
            ensure(gap <= GAP, || format!("gamma={gamma}, t={t}: gap {gap:.4}"))?;
        }

        // Same run with the ladder stopped at 1e-6, reported for reference.
        let floor = config("log_holder_preservation.toml", &[&set, "radii.r_min=1e-6"]);
        let rf = run(&floor)?;
        let ef = column(series(&rf, &format!("records_gamma_{gamma}"))?, "estimate")?;
        let gap = ef.iter().map(|e| (e - ef[0]).abs() / ef[0]).fold(0.0, f64::max);
        floor_gaps.push(format!("{gamma}:{gap:.3}"));
    }
    Ok(format!(
        "worst gap {worst_gap:.4} <= {GAP} with radii to 1e-40; worst run {worst_time:.1} s; \
         gap with radii stopped at 1e-6 [{}]",
        floor_gaps.join(", ")
    ))
}

/// Holder data under linear strain saturates the upper sandwich bound.
fn criterion_2() -> Check {
    const SLACK: f64 = 0.01;
    const FINAL_TOL: f64 = 0.05;
    let beta = 0.5;
    let start = Instant::now();
    let r = run(&config("holder_sandwich.toml", &[]))?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed <= 60.0, || format!("took {elapsed:.1} s"))?;
    let s = series(&r, "records_beta_0.5")?;
    let t = column(s, "t")?;
    let est = column(s, "estimate")?;
    for (t, e) in t.iter().zip(&est) {
        let lo = (-beta * t).exp() * est[0] * (1.0 - SLACK);
        let hi = (beta * t).exp() * est[0] * (1.0 + SLACK);
        ensure(lo <= *e && *e <= hi, || format!("t={t}: {e} outside [{lo}, {hi}]"))?;
    }
    let ratio = est.last().unwrap() / est[0];
    let expected = (beta * 1.0f64).exp();
    ensure((ratio - expected).abs() <= FINAL_TOL * expected, || {
        format!("est(1)/est(0) = {ratio} vs {expected}")
    })?;
    Ok(format!("est(1)/est(0) = {ratio:.5} vs e^0.5 = {expected:.5}; {elapsed:.1} s"))
}

/// Random pairs under the cellular flow stay within [1/mu, mu].
fn criterion_3() -> Check {
    const SLACK: f64 = 0.01;
    let start = Instant::now();
    let r = run(&config("bilipschitz_cellular.toml", &[]))?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed <= 30.0, || format!("took {elapsed:.1} s"))?;
    let pairs = series(&r, "pairs")?;
    ensure(pairs.rows.len() == 100, || format!("{} pairs", pairs.rows.len()))?;
    let lower = column(pairs, "lower_margin")?;
    let upper = column(pairs, "upper_margin")?;
    let violations = lower
        .iter()
        .zip(&upper)
        .filter(|(l, u)| **l < 1.0 / (1.0 + SLACK) || **u > 1.0 + SLACK)
        .count();
    ensure(violations == 0, || format!("{violations} violations"))?;
    // |grad u| = |cos x1 cos x2| + |sin x1 sin x2| peaks at 1, so mu(1) = e.
    let budget = series(&r, "budget")?;
    let mu_end = *column(budget, "mu_t")?.last().unwrap();
    ensure((mu_end - E).abs() < 1e-9, || format!("mu(1) = {mu_end}"))?;
    let refine = series(&r, "mu_refinement")?;
    let diff = column(refine, "difference")?[0];
    ensure(diff <= 1e-6, || format!("mu(1) changes by {diff:e} under refinement"))?;
    Ok(format!("0 violations in 100 pairs; mu(1) = {mu_end:.9}; refinement change {diff:.1e}; {elapsed:.1} s"))
}

/// Log-ratio spread shrinks with the radius and stays inside its envelope.
fn criterion_4() -> Check {
    let start = Instant::now();
    let r = run(&config("log_ratio_strain.toml", &[]))?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed <= 10.0, || format!("took {elapsed:.1} s"))?;
    let s = series(&r, "log_ratio")?;
    let ks = column(s, "k")?;
    ensure(ks == (5..=14).map(f64::from).collect::<Vec<_>>(), || format!("k = {ks:?}"))?;
    let lo = column(s, "min_ratio")?;
    let hi = column(s, "max_ratio")?;
    let dev = column(s, "worst_deviation")?;
    let gamma = 0.5;
    for i in 0..ks.len() {
        // log mu(1) = 1 for unit strain and log(1/r) = k.
        let k = ks[i];
        let env_lo = (1.0 + 1.0 / k).powf(-gamma);
        let env_hi = (1.0 - 1.0 / k).powf(-gamma);
        let tol = 1e-9;
        ensure(lo[i] >= env_lo * (1.0 - tol) && hi[i] <= env_hi * (1.0 + tol), || {
            format!("k={k}: [{}, {}] outside [{env_lo}, {env_hi}]", lo[i], hi[i])
        })?;
        if i > 0 {
            ensure(dev[i] < dev[i - 1], || format!("deviation not decreasing at k={k}"))?;
        }
    }
    Ok(format!(
        "worst |ratio - 1| {:.4} -> {:.4} over k = 5..14, inside envelope; {elapsed:.2} s",
        dev[0],
        dev[dev.len() - 1]
    ))
}

/// Biot-Savart eigenfunction, L2 conservation, symmetry and origin fixed point.
fn criterion_5() -> Check {
    let start = Instant::now();
    let g = Grid2::new(64, PI).map_err(|e| e.to_string())?;
    let s = EulerState::from_fn(g, SymmetryTag::NONE, |x| x.x.sin() * x.y.sin()).map_err(|e| e.to_string())?;
    let v = biot_savart(&s).map_err(|e| e.to_string())?;
    let (u1, u2) = v.components();
    let mut err: f64 = 0.0;
    for i in 0..g.n() {
        for j in 0..g.n() {
            let x = g.node(i, j);
            err = err.max((u1[[i, j]] - 0.5 * x.x.sin() * x.y.cos()).abs());
            err = err.max((u2[[i, j]] + 0.5 * x.x.cos() * x.y.sin()).abs());
        }
    }
    ensure(err <= 1e-12, || format!("Biot-Savart error {err:e}"))?;

    let g = Grid2::new(256, PI).map_err(|e| e.to_string())?;
    let smooth = |x: &Point| {
        x.x.sin() * x.y.sin() + 0.5 * (2.0 * x.x).cos() * (3.0 * x.y).sin() + 0.3 * (x.x + 2.0 * x.y).cos()
    };
    let mut s = EulerState::from_fn(g, SymmetryTag::NONE, smooth).map_err(|e| e.to_string())?;
    let solver = EulerSolver::new(g);
    let l2_0 = s.l2_norm();
    let mut drift: f64 = 0.0;
    for _ in 0..100 {
        s = solver.step(&s, 0.01).map_err(|e| e.to_string())?;
        drift = drift.max((s.l2_norm() - l2_0).abs() / l2_0);
    }
    ensure(drift <= 1e-3, || format!("L2 drift {drift:e}"))?;

    let g = Grid2::new(128, PI).map_err(|e| e.to_string())?;
    let mut s = bahouri_chemin_init(0.5, g).map_err(|e| e.to_string())?;
    let solver = EulerSolver::new(g).with_symmetry_projection(false);
    let mut tracer = [Point::zeros()];
    let (mut defect, mut drift_origin, mut speed_origin): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..100 {
        s = solver.step_with_tracers(&s, 0.01, &mut tracer).map_err(|e| e.to_string())?;
        defect = defect.max(s.symmetry_defect() / s.max_abs());
        drift_origin = drift_origin.max(tracer[0].norm());
        speed_origin = speed_origin.max(solver.velocity_at(&s, &Point::zeros()).norm());
    }
    ensure(defect <= 1e-10, || format!("symmetry defect {defect:e}"))?;
    ensure(drift_origin <= 1e-10 && speed_origin <= 1e-10, || {
        format!("origin moved {drift_origin:e}, speed {speed_origin:e}")
    })?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed <= 120.0, || format!("took {elapsed:.1} s"))?;
    Ok(format!(
        "Biot-Savart {err:.1e}; L2 drift {drift:.1e}; symmetry defect {defect:.1e}; origin speed {speed_origin:.1e}; {elapsed:.1} s"
    ))
}

/// Holder coefficient of the cusp vorticity grows while the log-Holder one holds.
fn criterion_6() -> Check {
    const INITIAL: f64 = 0.03;
    const LOG_GAP: f64 = 0.15;
    let cfg = config("euler_growth.toml", &[]);
    let e = cfg.euler.clone().ok_or("no [euler] table")?;
    ensure(e.beta == 0.5 && e.n == 512 && e.min_radius_cells >= 8.0, || "config drifted".into())?;
    let start = Instant::now();
    let r = run(&cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed <= 900.0, || format!("took {elapsed:.1} s"))?;
    ensure(r.notes.is_empty(), || r.notes.join("; "))?;
    let s = series(&r, "origin")?;
    let t = column(s, "t")?;
    let h = column(s, "holder")?;
    ensure(h.len() == 8, || format!("{} outputs", h.len()))?;

    // omega0 / |x|^beta = 2 cos sin / (4 cos^2 + sin^2): maximum 1/2 at tan = 2.
    let beta = e.beta;
    let oracle = (0..100_000)
        .map(|m| {
            let a = 0.5 * PI * m as f64 / 100_000.0;
            let x = Point::new(a.cos(), a.sin()) * 0.05;
            bahouri_chemin_profile(&x, beta) / x.norm().powf(beta)
        })
        .fold(0.0, f64::max);
    ensure((h[0] - oracle).abs() <= INITIAL * oracle, || format!("initial {} vs {oracle}", h[0]))?;

    // Noise floor: the t = 0 coefficient recomputed with the node-only sampler.
    let g = Grid2::new(e.n, e.half_period).map_err(|e| e.to_string())?;
    let s0 = bahouri_chemin_init(beta, g).map_err(|e| e.to_string())?;
    let radii = e.radii().map_err(|e| e.to_string())?;
    let m = ModulusFamily::holder(beta).map_err(|e| e.to_string())?;
    let p = vorticity_profile(&s0, &m, &radii, &GridSampler).map_err(|e| e.to_string())?;
    let repeat = estimate_coefficient(&p, cfg.tolerances.plateau).map_err(|e| e.to_string())?.value;
    let noise = (h[0] - repeat).abs();
    let min_step = h.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    ensure(min_step > noise, || format!("smallest increment {min_step:e} vs noise {noise:e}"))?;
    let ln: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let rate = least_squares_slope(&t, &ln);
    ensure(rate > 0.0, || format!("fitted rate {rate}"))?;

    let lg = column(s, "log_holder")?;
    let gap = lg.iter().map(|v| (v - lg[0]).abs() / lg[0]).fold(0.0, f64::max);
    ensure(gap <= LOG_GAP, || format!("log-Holder gap {gap:.4}"))?;
    Ok(format!(
        "Holder {:.4} -> {:.4} (initial oracle {oracle:.4}), smallest step {min_step:.2e} > noise {noise:.2e}, \
         rate {rate:.4}; log-Holder gap {gap:.4}; {elapsed:.1} s",
        h[0],
        h[h.len() - 1]
    ))
}

/// Origin-strain integral of log-modulated odd-odd data diverges like log log.
fn criterion_7() -> Check {
    const TOL: f64 = 0.10;
    let start = Instant::now();
    let outer = 0.5;
    let f = scalar_catalog()
        .build(&CatalogSpec::new("log_odd_odd").with("gamma", 1.0).with("outer", outer))
        .map_err(|e| e.to_string())?;
    // (4/pi) * int_0^{pi/2} 2 sin^2 cos^2 dphi * int dr / (r log 1/r)
    let oracle = |inner: f64| (4.0 / PI) * (PI / 8.0) * ((1.0 / inner).ln().ln() - (1.0 / outer).ln().ln());
    let mut last = f64::NEG_INFINITY;
    let mut parts = Vec::new();
    for inner in [1e-2, 1e-3, 1e-4] {
        let q = origin_strain_quadrature(f.as_ref(), inner, outer, 64).map_err(|e| e.to_string())?;
        let o = oracle(inner);
        ensure((q - o).abs() <= TOL * o, || format!("cutoff {inner}: {q} vs {o}"))?;
        ensure(q > last, || format!("not increasing at cutoff {inner}"))?;
        last = q;
        parts.push(format!("{inner:.0e}: {q:.5}/{o:.5}"));
    }

    // Grid sum of the same profile on a fine periodic grid.
    let g = Grid2::new(1024, 1.0).map_err(|e| e.to_string())?;
    let s = EulerState::from_fn(g, SymmetryTag::ODD_ODD, |x| f.eval(x).unwrap_or(0.0)).map_err(|e| e.to_string())?;
    let grid = origin_strain_diagnostic(&s, 1e-2).map_err(|e| e.to_string())?;
    let o = oracle(1e-2);
    ensure((grid - o).abs() <= TOL * o, || format!("grid sum {grid} vs {o}"))?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed <= 30.0, || format!("took {elapsed:.1} s"))?;
    Ok(format!("quadrature/oracle {}; grid sum at 1e-2 {grid:.5}; {elapsed:.2} s", parts.join(", ")))
}

/// Re-running a config with the same seed reproduces the report.
fn criterion_8() -> Check {
    let mut checked = Vec::new();
    for (name, jobs) in [
        ("bilipschitz_cellular.toml", [1, 4]),
        ("log_ratio_strain.toml", [1, 3]),
        ("holder_sandwich_sweep.toml", [2, 0]),
        ("controls/euler_growth_zero_data.toml", [1, 2]),
    ] {
        let mut outputs = Vec::new();
        for j in jobs {
            let mut cfg = config(name, &[]);
            cfg.jobs = j;
            let mut report = loghold::harness::with_jobs(j, || run(&cfg)).map_err(|e| e.to_string())??;
            report.wall_clock = Default::default();
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let files = write_report(&report, dir.path()).map_err(|e| e.to_string())?;
            let mut contents = Vec::new();
            for f in &files {
                let rel = f.strip_prefix(dir.path()).unwrap().to_path_buf();
                contents.push((rel, std::fs::read(f).map_err(|e| e.to_string())?));
            }
            contents.sort();
            outputs.push(contents);
        }
        ensure(outputs[0] == outputs[1], || format!("{name}: outputs differ between runs"))?;
        checked.push(format!("{name} ({} files)", outputs[0].len()));
    }
    Ok(format!("byte-identical reruns: {}", checked.join(", ")))
}

fn main() {
    let criteria: [(u32, fn() -> Check); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, check) in criteria {
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        match check() {
            Ok(msg) => println!("criterion {n}: PASS {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n}: FAIL {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
