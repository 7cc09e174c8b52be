//! End-to-end pipelines behind the CLI subcommands: single-run bundles,
//! domain sweeps with a stability fit, and report summaries.
//!
//! Fixed output names inside `output_dir`: mesh.txt, u.txt, tables.csv,
//! deficits.json, sweep.csv (plus sweep.json carrying the fit), and
//! plots/*.svg. Everything written is byte-deterministic for a given config.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{parse_axis, parse_pairs, ConfigError, RunConfig};
use crate::deficits::{deficit_report, joined_csv, DeficitReport};
use crate::geometry::{build_boundary, domain_eps, BoundaryCurve, GeometryReport, Shape};
use crate::levelset::{
    critical_measure, distribution_tables, l1_distance, schwarz_rearrangement, CriticalMeasure,
    DistributionTables, L1Result, RadialProfile,
};
use crate::mesh::{triangulate, Mesh};
use crate::solver::{solve, Field, SolveStats, SolverConfig};
use crate::svg::{line_plot, Series};
use crate::vec2::vec2;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solve failed: {0}")]
    Solve(String),
    #[error("post-processing failed: {0}")]
    Post(String),
}

impl PipelineError {
    /// Script-facing exit code: 2 config, 3 solver, 4 post-processing.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Solve(_) => 3,
            PipelineError::Post(_) => 4,
        }
    }
}

impl From<ConfigError> for PipelineError {
    fn from(e: ConfigError) -> Self {
        PipelineError::Config(e.to_string())
    }
}

fn post<E: std::fmt::Display>(e: E) -> PipelineError {
    PipelineError::Post(e.to_string())
}

/// Everything the solve stage produces.
#[derive(Debug)]
pub struct Solved {
    pub curve: BoundaryCurve,
    pub mesh: Mesh,
    pub field: Field,
    pub stats: SolveStats,
}

/// Everything the analysis stage produces.
pub struct Analysis {
    pub geometry: GeometryReport,
    pub tables: DistributionTables,
    pub report: DeficitReport,
    pub profile: RadialProfile,
    pub l1: L1Result,
    pub critical: CriticalMeasure,
}

/// Validates the config-derived objects and solves. Validation failures are
/// config errors; mesh generation and iteration failures are solve errors.
pub fn build_and_solve(cfg: &RunConfig) -> Result<Solved, PipelineError> {
    let cfg_err = |m: String| PipelineError::Config(m);
    if !(cfg.h > 0.0) {
        return Err(cfg_err(format!("h = {} must be positive", cfg.h)));
    }
    if cfg.t_levels < 2 {
        return Err(cfg_err(format!(
            "t_levels = {} must be at least 2",
            cfg.t_levels
        )));
    }
    let sc = SolverConfig::with_p(cfg.p);
    sc.validate().map_err(|e| cfg_err(e.to_string()))?;
    cfg.f.validate().map_err(|e| cfg_err(e.to_string()))?;
    let curve = build_boundary(&cfg.domain).map_err(|e| cfg_err(e.to_string()))?;
    let mesh = triangulate(&curve, cfg.h).map_err(|e| PipelineError::Solve(e.to_string()))?;
    let (field, stats) =
        solve(&mesh, &cfg.f, &sc).map_err(|e| PipelineError::Solve(e.to_string()))?;
    Ok(Solved {
        curve,
        mesh,
        field,
        stats,
    })
}

/// Runs the full post-solve analysis: geometry deficit, level tables,
/// deficit report, rearrangement, L1 distance, near-critical measure.
pub fn analyze(cfg: &RunConfig, s: &Solved) -> Result<Analysis, PipelineError> {
    let geometry = domain_eps(&s.curve);
    let tables =
        distribution_tables(&s.mesh, &s.field, &cfg.f, cfg.p, cfg.t_levels).map_err(post)?;
    let report = deficit_report(&s.mesh, &s.field, &tables, &s.curve, &cfg.f, cfg.p)
        .map_err(post)?;
    let profile = schwarz_rearrangement(&s.mesh, &s.field, 256);
    let l1 = l1_distance(&s.mesh, &s.field, &profile).map_err(post)?;
    let gs = s.field.grad_sup();
    // log-spaced window [0.05, 0.4] of sup |grad u|, the resolvable band
    let sigma: Vec<f64> = (0..16)
        .map(|i| gs * 0.05 * 8.0f64.powf(i as f64 / 15.0))
        .collect();
    let critical = critical_measure(&s.mesh, &s.field, &sigma);
    Ok(Analysis {
        geometry,
        tables,
        report,
        profile,
        l1,
        critical,
    })
}

#[derive(Serialize)]
struct SolverMeta {
    iterations: usize,
    delta_reg: f64,
    rel_change: f64,
    max_u: f64,
}

#[derive(Serialize)]
struct L1Meta {
    distance: f64,
    x0: [f64; 2],
    grid_spacing: f64,
}

#[derive(Serialize)]
struct CriticalMeta<'a> {
    sigma: &'a [f64],
    measure: &'a [f64],
    slope: f64,
    log_c: f64,
    fitted: usize,
}

#[derive(Serialize)]
struct DeficitsDoc<'a> {
    config_hash: String,
    config: String,
    eps: f64,
    geometry: &'a GeometryReport,
    solver: SolverMeta,
    deficits: &'a DeficitReport,
    l1: L1Meta,
    critical: CriticalMeta<'a>,
}

fn write_file(path: &Path, content: &str) -> Result<(), PipelineError> {
    fs::write(path, content)
        .map_err(|e| PipelineError::Post(format!("writing {}: {e}", path.display())))
}

fn ensure_dir(path: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(path)
        .map_err(|e| PipelineError::Post(format!("creating {}: {e}", path.display())))
}

/// `solve <config>`: mesh and solution field under fixed names.
pub fn run_solve(cfg: &RunConfig) -> Result<String, PipelineError> {
    let s = build_and_solve(cfg)?;
    ensure_dir(&cfg.output_dir)?;
    write_file(&cfg.output_dir.join("mesh.txt"), &s.mesh.write_text())?;
    write_file(&cfg.output_dir.join("u.txt"), &s.field.write_text())?;
    Ok(format!(
        "solved: {} vertices, {} triangles, {} iterations, max u = {:.6}; wrote {}",
        s.mesh.vertices.len(),
        s.mesh.triangles.len(),
        s.stats.iterations,
        s.field.max(),
        cfg.output_dir.display()
    ))
}

fn profile_plot(s: &Solved, a: &Analysis) -> String {
    let (lo, hi) = s.mesh.bbox();
    let yc = s.curve.centroid.y;
    let ball_center = vec2(-a.l1.x0.x, -a.l1.x0.y);
    let loc = s.mesh.locator();
    let n = 240;
    let mut u_line = Vec::with_capacity(n + 1);
    let mut star_line = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let x = lo.x + (hi.x - lo.x) * i as f64 / n as f64;
        let pt = vec2(x, yc);
        u_line.push((x, loc.eval(&s.mesh, &s.field.values, pt)));
        star_line.push((x, a.profile.value(pt.dist(ball_center))));
    }
    line_plot(
        "u along the horizontal diameter vs its rearrangement",
        "x",
        "u",
        &[Series::new("u", u_line), Series::new("u*", star_line)],
    )
}

fn levels_plot(a: &Analysis) -> String {
    let d1: Vec<(f64, f64)> = a.tables.t.iter().copied().zip(a.report.d1.iter().copied()).collect();
    let d2: Vec<(f64, f64)> = a.tables.t.iter().copied().zip(a.report.d2.iter().copied()).collect();
    line_plot(
        "per-level deficits",
        "t",
        "deficit",
        &[Series::new("D1", d1), Series::new("D2", d2)],
    )
}

fn critical_plot(a: &Analysis) -> String {
    let pts: Vec<(f64, f64)> = a
        .critical
        .sigma
        .iter()
        .zip(&a.critical.measure)
        .filter(|&(&s, &m)| s > 0.0 && m > 0.0)
        .map(|(&s, &m)| (s.log10(), m.log10()))
        .collect();
    let fit: Vec<(f64, f64)> = if a.critical.slope.is_finite() {
        pts.iter()
            .map(|&(lx, _)| {
                let ln_sigma = lx * std::f64::consts::LN_10;
                (
                    lx,
                    (a.critical.log_c + a.critical.slope * ln_sigma) / std::f64::consts::LN_10,
                )
            })
            .collect()
    } else {
        Vec::new()
    };
    line_plot(
        "near-critical set measure",
        "log10 sigma",
        "log10 M_u",
        &[Series::new("M_u", pts), Series::new("fit", fit)],
    )
}

/// `deficits <config>`: the full report bundle (solve artifacts, joined
/// tables CSV, deficit JSON, plots), all under fixed names.
pub fn run_deficits(cfg: &RunConfig) -> Result<String, PipelineError> {
    let s = build_and_solve(cfg)?;
    ensure_dir(&cfg.output_dir)?;
    write_file(&cfg.output_dir.join("mesh.txt"), &s.mesh.write_text())?;
    write_file(&cfg.output_dir.join("u.txt"), &s.field.write_text())?;

    let a = analyze(cfg, &s)?;
    let hash = cfg.hash();
    let mut tables_csv = joined_csv(&a.tables, &a.report);
    tables_csv.push_str(&format!("# config_hash={hash}\n"));
    write_file(&cfg.output_dir.join("tables.csv"), &tables_csv)?;

    let doc = DeficitsDoc {
        config_hash: hash,
        config: cfg.canonical(),
        eps: a.geometry.eps,
        geometry: &a.geometry,
        solver: SolverMeta {
            iterations: s.stats.iterations,
            delta_reg: s.stats.delta_reg,
            rel_change: s.stats.rel_change,
            max_u: s.field.max(),
        },
        deficits: &a.report,
        l1: L1Meta {
            distance: a.l1.distance,
            x0: a.l1.x0.to_array(),
            grid_spacing: a.l1.grid_spacing,
        },
        critical: CriticalMeta {
            sigma: &a.critical.sigma,
            measure: &a.critical.measure,
            slope: a.critical.slope,
            log_c: a.critical.log_c,
            fitted: a.critical.fitted,
        },
    };
    let json = serde_json::to_string_pretty(&doc).map_err(post)?;
    write_file(&cfg.output_dir.join("deficits.json"), &json)?;

    let plots = cfg.output_dir.join("plots");
    ensure_dir(&plots)?;
    write_file(&plots.join("profile.svg"), &profile_plot(&s, &a))?;
    write_file(&plots.join("levels.svg"), &levels_plot(&a))?;
    write_file(&plots.join("critical.svg"), &critical_plot(&a))?;

    Ok(format!(
        "deficits: eps = {:.3e}, identity resid = {:.3e}, L1 = {:.3e}; wrote {}",
        a.geometry.eps,
        a.report.identity_resid,
        a.l1.distance,
        cfg.output_dir.display()
    ))
}

// ---------------------------------------------------------------------------
// sweeps
// ---------------------------------------------------------------------------

/// One sweep row; failed runs keep their error in `status` and NaN metrics.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub label: String,
    pub p: f64,
    pub eps: f64,
    pub l1: f64,
    pub identity_resid: f64,
    pub d3: f64,
    pub d4: f64,
    pub d5: f64,
    pub min_w: f64,
    pub mu_slope: f64,
    pub status: String,
}

/// Least-squares fit of log l1 against log eps (natural logs).
#[derive(Clone, Debug, Serialize)]
pub struct SweepFit {
    pub rows: usize,
    pub used: usize,
    pub theta: Option<f64>,
    pub log_c: Option<f64>,
    pub skipped: Option<String>,
}

// labels are CSV cells, so they must stay comma-free
fn shape_label(shape: &Shape) -> String {
    match shape {
        Shape::Disk { r } => format!("disk({r})"),
        Shape::Ellipse { a, b } => format!("ellipse({a}/{b})"),
        Shape::Star { r, amp, k } => format!("star({r}/{amp}/{k})"),
    }
}

fn sweep_row(cfg: &RunConfig) -> SweepRow {
    let label = shape_label(&cfg.domain.shape);
    let run = || -> Result<[f64; 8], PipelineError> {
        let s = build_and_solve(cfg)?;
        let a = analyze(cfg, &s)?;
        Ok([
            a.geometry.eps,
            a.l1.distance,
            a.report.identity_resid,
            a.report.d3,
            a.report.d4,
            a.report.d5,
            a.report.w_min,
            a.critical.slope,
        ])
    };
    match run() {
        Ok([eps, l1, identity_resid, d3, d4, d5, min_w, mu_slope]) => SweepRow {
            label,
            p: cfg.p,
            eps,
            l1,
            identity_resid,
            d3,
            d4,
            d5,
            min_w,
            mu_slope,
            status: "ok".to_string(),
        },
        Err(e) => SweepRow {
            label,
            p: cfg.p,
            eps: f64::NAN,
            l1: f64::NAN,
            identity_resid: f64::NAN,
            d3: f64::NAN,
            d4: f64::NAN,
            d5: f64::NAN,
            min_w: f64::NAN,
            mu_slope: f64::NAN,
            status: e.to_string().replace(',', ";"),
        },
    }
}

/// Fits the stability trend over the usable rows; refuses degenerate input.
pub fn stability_fit(rows: &[SweepRow]) -> SweepFit {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.status == "ok" && r.eps > 1e-12 && r.l1 > 0.0)
        .map(|r| (r.eps.ln(), r.l1.ln()))
        .collect();
    let degenerate = |used: usize| SweepFit {
        rows: rows.len(),
        used,
        theta: None,
        log_c: None,
        skipped: Some("degenerate eps range".to_string()),
    };
    if pts.len() < 3 {
        return degenerate(pts.len());
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread < 1e-9 {
        return degenerate(pts.len());
    }
    let n = pts.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let theta = sxy / sxx;
    SweepFit {
        rows: rows.len(),
        used: pts.len(),
        theta: Some(theta),
        log_c: Some(my - theta * mx),
        skipped: None,
    }
}

fn csv_cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s =
        String::from("label,p,eps,l1,identity_resid,D3,D4,D5,min_W,mu_slope,status\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.label,
            r.p,
            csv_cell(r.eps),
            csv_cell(r.l1),
            csv_cell(r.identity_resid),
            csv_cell(r.d3),
            csv_cell(r.d4),
            csv_cell(r.d5),
            csv_cell(r.min_w),
            csv_cell(r.mu_slope),
            r.status
        ));
    }
    s
}

#[derive(Serialize)]
struct SweepDoc<'a> {
    config_hash: String,
    fit: &'a SweepFit,
}

/// `sweep <config> --axis <file>`: runs every axis block (times every p in
/// p_list) in a bounded pool, writes sweep.csv sorted by eps and the fit to
/// sweep.json.
pub fn run_sweep(base_text: &str, axis_text: &str) -> Result<String, PipelineError> {
    let base_pairs = parse_pairs(base_text)?;
    let base = RunConfig::from_pairs(&base_pairs)?;
    let blocks = parse_axis(axis_text)?;
    if blocks.len() < 3 {
        return Err(PipelineError::Config(format!(
            "need >= 3 domains in the sweep axis, got {}",
            blocks.len()
        )));
    }
    let mut runs: Vec<RunConfig> = Vec::new();
    for block in &blocks {
        let cfg = RunConfig::with_overrides(&base_pairs, block)?;
        for &p in &cfg.p_list {
            runs.push(RunConfig {
                p,
                ..cfg.clone()
            });
        }
    }
    let workers = if base.workers == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        base.workers
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(post)?;
    let mut rows: Vec<SweepRow> = pool.install(|| runs.par_iter().map(sweep_row).collect());
    rows.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    let fit = stability_fit(&rows);

    ensure_dir(&base.output_dir)?;
    write_file(&base.output_dir.join("sweep.csv"), &sweep_csv(&rows))?;
    let doc = SweepDoc {
        config_hash: base.hash(),
        fit: &fit,
    };
    let json = serde_json::to_string_pretty(&doc).map_err(post)?;
    write_file(&base.output_dir.join("sweep.json"), &json)?;

    let fit_text = match (&fit.theta, &fit.skipped) {
        (Some(t), _) => format!("theta = {t:.4}"),
        (None, Some(why)) => format!("fit skipped: {why}"),
        (None, None) => "fit skipped".to_string(),
    };
    let failures = rows.iter().filter(|r| r.status != "ok").count();
    Ok(format!(
        "sweep: {} runs ({} failed), {}; wrote {}",
        rows.len(),
        failures,
        fit_text,
        base.output_dir.display()
    ))
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

fn fmt_json_number(v: &serde_json::Value) -> String {
    match v.as_f64() {
        Some(x) => format!("{x:.6e}"),
        None => "n/a".to_string(),
    }
}

/// `report <dir>`: digest of a previously written bundle or sweep.
pub fn run_report(dir: &Path) -> Result<String, PipelineError> {
    let dpath = dir.join("deficits.json");
    let spath = dir.join("sweep.csv");
    let mut out = String::new();
    if dpath.exists() {
        let text = fs::read_to_string(&dpath).map_err(post)?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(post)?;
        out.push_str(&format!("bundle {}\n", dir.display()));
        out.push_str(&format!(
            "  config {}\n",
            v["config_hash"].as_str().unwrap_or("?")
        ));
        out.push_str(&format!("  eps            {}\n", fmt_json_number(&v["eps"])));
        for key in ["d3", "d4", "d5", "identity_resid", "pohozaev_resid"] {
            out.push_str(&format!(
                "  {key:<14} {}\n",
                fmt_json_number(&v["deficits"][key])
            ));
        }
        out.push_str(&format!(
            "  l1 distance    {}\n",
            fmt_json_number(&v["l1"]["distance"])
        ));
        out.push_str(&format!(
            "  M_u slope      {}\n",
            fmt_json_number(&v["critical"]["slope"])
        ));
    }
    if spath.exists() {
        let text = fs::read_to_string(&spath).map_err(post)?;
        let rows = text.lines().count().saturating_sub(1);
        out.push_str(&format!("sweep {} ({} rows)\n", spath.display(), rows));
        let jpath = dir.join("sweep.json");
        if jpath.exists() {
            let jt = fs::read_to_string(&jpath).map_err(post)?;
            let v: serde_json::Value = serde_json::from_str(&jt).map_err(post)?;
            out.push_str(&format!(
                "  theta = {}, skipped = {}\n",
                fmt_json_number(&v["fit"]["theta"]),
                v["fit"]["skipped"].as_str().unwrap_or("no")
            ));
        }
        // show the rows themselves; a sweep digest is small
        for line in text.lines().skip(1) {
            out.push_str(&format!("  {line}\n"));
        }
    }
    if out.is_empty() {
        return Err(PipelineError::Post(format!(
            "no deficits.json or sweep.csv under {}",
            dir.display()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn disk_cfg(dir: &Path) -> RunConfig {
        let mut cfg =
            RunConfig::parse("family=disk\nr=1\np=2\nh=0.15\nt_levels=24").unwrap();
        cfg.output_dir = dir.to_path_buf();
        cfg
    }

    #[test]
    fn exit_codes_map_stages() {
        assert_eq!(PipelineError::Config(String::new()).exit_code(), 2);
        assert_eq!(PipelineError::Solve(String::new()).exit_code(), 3);
        assert_eq!(PipelineError::Post(String::new()).exit_code(), 4);
    }

    #[test]
    fn config_stage_rejects_bad_inputs() {
        let cfg = RunConfig::parse("family=disk\nr=1\np=2\nh=-0.1").unwrap();
        let e = build_and_solve(&cfg).unwrap_err();
        assert_eq!(e.exit_code(), 2);

        let cfg = RunConfig::parse("family=star\nr=1\namp=0.9\nk=8\np=2\nh=0.1").unwrap();
        let e = build_and_solve(&cfg).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("curve simplicity check failed"));

        let cfg = RunConfig::parse("family=disk\nr=1\np=0.5\nh=0.1").unwrap();
        let e = build_and_solve(&cfg).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn sweep_requires_three_domains() {
        let e = run_sweep("family=disk\nr=1\np=2\nh=0.2", "r=1.0\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains(">= 3 domains"));
    }

    #[test]
    fn degenerate_sweep_skips_the_fit() {
        let mk = |eps: f64| SweepRow {
            label: "disk(1)".into(),
            p: 2.0,
            eps,
            l1: 1e-4,
            identity_resid: 0.0,
            d3: 0.0,
            d4: 0.0,
            d5: 0.0,
            min_w: 2.0,
            mu_slope: 2.0,
            status: "ok".into(),
        };
        let fit = stability_fit(&[mk(1e-14), mk(2e-14), mk(1e-15)]);
        assert_eq!(fit.theta, None);
        assert_eq!(fit.skipped.as_deref(), Some("degenerate eps range"));

        let fit = stability_fit(&[mk(1e-3), mk(2e-3), mk(4e-3)]);
        assert!(fit.theta.is_some());
        assert_eq!(fit.used, 3);
    }

    #[test]
    fn bundle_files_appear_with_fixed_names() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = disk_cfg(dir.path());
        let summary = run_deficits(&cfg).unwrap();
        assert!(summary.contains("eps"));
        for name in ["mesh.txt", "u.txt", "tables.csv", "deficits.json"] {
            assert!(dir.path().join(name).exists(), "{name} missing");
        }
        for name in ["profile.svg", "levels.svg", "critical.svg"] {
            assert!(dir.path().join("plots").join(name).exists(), "{name} missing");
        }
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("deficits.json")).unwrap())
                .unwrap();
        assert!(json["eps"].as_f64().unwrap() < 1e-6);
        assert_eq!(json["config_hash"], json["config_hash"].as_str().unwrap());
        let tables = fs::read_to_string(dir.path().join("tables.csv")).unwrap();
        assert!(tables.starts_with("t,mu,surf,I,K,"));
        assert!(tables.trim_end().ends_with(&format!(
            "# config_hash={}",
            json["config_hash"].as_str().unwrap()
        )));

        let report = run_report(dir.path()).unwrap();
        assert!(report.contains("eps"));
        assert!(report.contains(json["config_hash"].as_str().unwrap()));
    }

    #[test]
    fn missing_bundle_is_a_post_error() {
        let dir = tempfile::tempdir().unwrap();
        let e = run_report(dir.path()).unwrap_err();
        assert_eq!(e.exit_code(), 4);
    }
}
