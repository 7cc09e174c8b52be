//! End-to-end acceptance gates. Runs as a plain binary (no test harness) so
//! that every criterion prints exactly one PASS/FAIL line, then exits nonzero
//! if anything failed.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use plapsym::deficits::{d5_at, deficit_report, pohozaev_residual, DeficitReport};
use plapsym::geometry::{build_boundary, domain_eps, BoundaryCurve, DomainSpec};
use plapsym::levelset::{
    critical_measure, distribution_tables, l1_distance, schwarz_rearrangement, DistributionTables,
};
use plapsym::mesh::{triangulate, Mesh};
use plapsym::pipeline::{run_deficits, run_sweep};
use plapsym::solver::{gradient_bound_check, solve, Field, Nonlinearity, SolverConfig};
use plapsym::vec2::{vec2, Vec2};
use plapsym::RunConfig;

struct Run {
    p: f64,
    h: f64,
    curve: BoundaryCurve,
    mesh: Mesh,
    field: Field,
    tables: DistributionTables,
    report: DeficitReport,
    solve_secs: f64,
}

fn run_domain(spec: &DomainSpec, p: f64, h: f64, t_levels: usize) -> Result<Run, String> {
    let f = Nonlinearity::constant(1.0);
    let curve = build_boundary(spec).map_err(|e| e.to_string())?;
    let mesh = triangulate(&curve, h).map_err(|e| e.to_string())?;
    let t0 = Instant::now();
    let (field, _) = solve(&mesh, &f, &SolverConfig::with_p(p)).map_err(|e| e.to_string())?;
    let solve_secs = t0.elapsed().as_secs_f64();
    let tables =
        distribution_tables(&mesh, &field, &f, p, t_levels).map_err(|e| e.to_string())?;
    let report =
        deficit_report(&mesh, &field, &tables, &curve, &f, p).map_err(|e| e.to_string())?;
    Ok(Run {
        p,
        h,
        curve,
        mesh,
        field,
        tables,
        report,
        solve_secs,
    })
}

/// Exact solution on the unit disk with constant unit source:
/// u(r) = (p-1)/p * (1/2)^{1/(p-1)} * (1 - r^{p/(p-1)}).
fn disk_oracle(p: f64, r: f64) -> f64 {
    let pc = p / (p - 1.0);
    (p - 1.0) / p * 0.5f64.powf(1.0 / (p - 1.0)) * (1.0 - r.powf(pc))
}

fn require(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

// criterion 1: solver accuracy against the closed-form radial solution
fn c1(disk: &[Run]) -> Result<String, String> {
    let mut detail = String::new();
    for run in disk {
        let tol = if run.p == 2.0 { 5e-3 } else { 1e-2 };
        let mut worst = 0.0f64;
        for (v, &u) in run.mesh.vertices.iter().zip(&run.field.values) {
            worst = worst.max((u - disk_oracle(run.p, v.norm())).abs());
        }
        require(
            worst <= tol,
            format!("p={}: max-norm error {worst:.2e} exceeds {tol:.0e}", run.p),
        )?;
        require(
            run.solve_secs <= 60.0,
            format!("p={}: solve took {:.1} s", run.p, run.solve_secs),
        )?;
        let _ = write!(detail, "p={}: {worst:.1e} in {:.1}s; ", run.p, run.solve_secs);
    }
    detail.truncate(detail.len() - 2);
    Ok(detail)
}

fn central_flux_worst(tables: &DistributionTables) -> f64 {
    let n = tables.t.len();
    let skip = (0.02 * n as f64).ceil() as usize;
    tables.gg_mismatch[skip..n - skip]
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

// criterion 2: level-set flux balance I(t) = int_{u=t} |grad u|^{p-1}
fn c2(disk: &[Run], ellipse: &Run) -> Result<String, String> {
    let mut detail = String::new();
    for run in disk.iter().chain(std::iter::once(ellipse)) {
        let worst = central_flux_worst(&run.tables);
        require(
            worst <= 0.03,
            format!("p={} h={}: flux mismatch {:.2}%", run.p, run.h, 100.0 * worst),
        )?;
        let _ = write!(detail, "{:.2}%, ", 100.0 * worst);
    }
    detail.truncate(detail.len() - 2);
    Ok(format!("worst central-96% mismatches {detail}"))
}

// criterion 3: on the ball every deficit vanishes to O(h) simultaneously
fn c3(disk: &[Run]) -> Result<String, String> {
    let mut detail = String::new();
    for run in disk {
        let bound = 10.0 * run.h;
        let profile = schwarz_rearrangement(&run.mesh, &run.field, 256);
        let l1 = l1_distance(&run.mesh, &run.field, &profile).map_err(|e| e.to_string())?;
        let d5_center = d5_at(&run.mesh, &run.field, &run.curve, run.p, Vec2::ZERO).abs();
        let mut worst = 0.0f64;
        for (name, v) in [
            ("D1", run.report.d1.iter().cloned().fold(0.0, f64::max)),
            ("D2", run.report.d2.iter().cloned().fold(0.0, f64::max)),
            ("D3", run.report.d3.abs()),
            ("D4", run.report.d4.abs()),
            ("D5(center)", d5_center),
            ("L1", l1.distance),
        ] {
            require(
                v.is_finite() && v <= bound,
                format!("p={}: {name} = {v:.3e} exceeds 10h = {bound}", run.p),
            )?;
            worst = worst.max(v);
        }
        let _ = write!(detail, "p={}: {worst:.1e}, ", run.p);
    }
    detail.truncate(detail.len() - 2);
    Ok(format!("largest deficit vs 10h=0.5: {detail}"))
}

// criterion 4: the integral identity closes on non-radial domains
fn c4(ellipse: &Run, star: &Run) -> Result<String, String> {
    require(
        ellipse.report.identity_resid <= 0.05,
        format!("ellipse residual {:.3}", ellipse.report.identity_resid),
    )?;
    require(
        star.report.identity_resid <= 0.08,
        format!("star residual {:.3}", star.report.identity_resid),
    )?;
    Ok(format!(
        "residuals: ellipse {:.2e}, star {:.2e}",
        ellipse.report.identity_resid, star.report.identity_resid
    ))
}

// criterion 5: volume and boundary sides both hit pi/4; boundary side affine in x0
fn c5(disk_p2: &Run) -> Result<String, String> {
    let f = Nonlinearity::constant(1.0);
    let target = PI / 4.0;
    let base = pohozaev_residual(&disk_p2.mesh, &disk_p2.field, &f, 2.0, Vec2::ZERO);
    for (name, v) in [("volume side", base.lhs), ("boundary side", base.rhs)] {
        require(
            (v - target).abs() <= 0.03 * target,
            format!("{name} = {v:.4}, want pi/4 within 3%"),
        )?;
    }
    let grad = Vec2::from(base.rhs_gradient);
    let mut worst = 0.0f64;
    for x0 in [vec2(0.3, -0.2), vec2(-0.5, 0.1), vec2(0.05, 0.45)] {
        let moved = pohozaev_residual(&disk_p2.mesh, &disk_p2.field, &f, 2.0, x0);
        worst = worst.max((moved.rhs - (base.rhs + grad.dot(x0))).abs());
    }
    require(worst <= 1e-8, format!("affine defect {worst:.2e}"))?;
    Ok(format!(
        "sides {:.4}/{:.4} vs {target:.4}, affine defect {worst:.1e}",
        base.lhs, base.rhs
    ))
}

// criterion 6: near-critical measure matches pi (2 sigma^{p-1})^2 and its slope
fn c6() -> Result<String, String> {
    let mut detail = String::new();
    for (p, h, pointwise) in [(1.5, 0.04, true), (2.0, 0.02, true), (3.0, 0.02, false)] {
        let run = run_domain(&DomainSpec::disk(1.0), p, h, 16)?;
        let gs = run.field.grad_sup();
        let sigma: Vec<f64> = (0..16)
            .map(|i| gs * 0.05 * 8.0f64.powf(i as f64 / 15.0))
            .collect();
        let cm = critical_measure(&run.mesh, &run.field, &sigma);
        if pointwise {
            for (&s, &m) in cm.sigma.iter().zip(&cm.measure) {
                let exact = PI * (2.0 * s.powf(p - 1.0)).powi(2);
                require(
                    (m - exact).abs() <= 0.03 * exact,
                    format!(
                        "p={p}: M_u({s:.3}) = {m:.3e}, closed form {exact:.3e} (off by {:.1}%)",
                        100.0 * (m - exact).abs() / exact
                    ),
                )?;
            }
        }
        let want = 2.0 * (p - 1.0);
        require(
            (cm.slope - want).abs() <= 0.1,
            format!("p={p}: slope {:.3}, want {want} +- 0.1", cm.slope),
        )?;
        let _ = write!(detail, "p={p}: slope {:.3}, ", cm.slope);
    }
    detail.truncate(detail.len() - 2);
    Ok(detail)
}

// criterion 7: the level weight W stays above its closed-form floor
fn c7(disk: &[Run]) -> Result<String, String> {
    let mut detail = String::new();
    for run in disk.iter().filter(|r| r.p == 2.0 || r.p == 3.0) {
        let c1 = run
            .report
            .w_lower
            .ok_or_else(|| format!("p={}: no lower bound computed", run.p))?;
        let expected = if run.p == 2.0 {
            2.0
        } else {
            0.25 * run.curve.area.powf(0.25)
        };
        require(
            (c1 - expected).abs() <= 1e-12 * expected,
            format!("p={}: C1 = {c1}, expected {expected}", run.p),
        )?;
        require(
            run.report.w_min >= c1 - 1e-3,
            format!("p={}: min W = {} below C1 = {c1}", run.p, run.report.w_min),
        )?;
        let _ = write!(detail, "p={}: min W {:.3} >= C1 {:.3}, ", run.p, run.report.w_min, c1);
    }
    detail.truncate(detail.len() - 2);
    Ok(detail)
}

// criterion 8: every deficit is nonnegative across the domain/p matrix
fn c8() -> Result<String, String> {
    let domains = [
        ("disk", DomainSpec::disk(1.0)),
        ("ellipse", DomainSpec::ellipse(1.2, 1.0 / 1.2)),
        ("star", DomainSpec::star(1.0, 0.03, 4)),
    ];
    let mut runs = 0;
    for (name, spec) in &domains {
        for p in [1.5, 2.0, 3.0] {
            let run = run_domain(spec, p, 0.08, 32)?;
            let tol = -1e-6 * run.report.identity_scale.abs().max(1.0);
            for (what, v) in [
                ("D1", run.report.d1.iter().cloned().fold(f64::INFINITY, f64::min)),
                ("D2", run.report.d2.iter().cloned().fold(f64::INFINITY, f64::min)),
                ("Dlevel", run.report.dlevel.iter().cloned().fold(f64::INFINITY, f64::min)),
                ("Df", run.report.hoelder_df.iter().cloned().fold(f64::INFINITY, f64::min)),
                ("D3", run.report.d3),
                ("D4", run.report.d4),
            ] {
                require(
                    v >= tol,
                    format!("{name} p={p}: {what} = {v:.3e} below {tol:.1e}"),
                )?;
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} runs, all of D1, D2, D3, D4, Dlevel, Df nonnegative"))
}

// criterion 9: the asymmetry sweep trends the right way
fn c9(dir: &std::path::Path) -> Result<String, String> {
    let base = format!(
        "family=disk\nr=1\np=2\nh=0.1\nt_levels=32\noutput_dir={}\n",
        dir.display()
    );
    let axis = "family=ellipse\na=1.05\nb=0.952\n\n\
                family=ellipse\na=1.1\nb=0.909\n\n\
                family=ellipse\na=1.2\nb=0.833\n";
    run_sweep(&base, axis).map_err(|e| e.to_string())?;
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).map_err(|e| e.to_string())?;
    let mut eps = Vec::new();
    let mut l1 = Vec::new();
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        require(cells[10] == "ok", format!("row failed: {line}"))?;
        eps.push(cells[2].parse::<f64>().map_err(|e| e.to_string())?);
        l1.push(cells[3].parse::<f64>().map_err(|e| e.to_string())?);
    }
    require(eps.len() == 3, format!("expected 3 rows, got {}", eps.len()))?;
    require(
        eps.windows(2).all(|w| w[0] < w[1]),
        format!("eps not strictly increasing: {eps:?}"),
    )?;
    require(
        l1.windows(2).all(|w| w[0] < w[1]),
        format!("L1 not strictly increasing: {l1:?}"),
    )?;
    let fit: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("sweep.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let theta = fit["fit"]["theta"]
        .as_f64()
        .ok_or("fit was skipped".to_string())?;
    require(theta > 0.0, format!("theta = {theta}"))?;
    Ok(format!(
        "eps {:.2}..{:.2}, L1 {:.3}..{:.3}, theta {theta:.3}",
        eps[0], eps[2], l1[0], l1[2]
    ))
}

// criterion 10: gradient sup matches the radial value and the a priori bound
fn c10(disk_p2: &Run) -> Result<String, String> {
    let geom = domain_eps(&disk_p2.curve);
    let gb = gradient_bound_check(
        &disk_p2.mesh,
        &disk_p2.field,
        &Nonlinearity::constant(1.0),
        2.0,
        geom.m0_minus,
    );
    require(
        (gb.observed_grad_sup - 0.5).abs() <= 0.01,
        format!("observed sup |grad u| = {:.4}, want 0.5 +- 0.01", gb.observed_grad_sup),
    )?;
    require(
        gb.observed_grad_sup <= gb.bound && gb.satisfied,
        format!("observed {:.4} vs bound {:.4}", gb.observed_grad_sup, gb.bound),
    )?;
    Ok(format!(
        "observed {:.4} within 0.5 +- 0.01 and below bound {:.4}",
        gb.observed_grad_sup, gb.bound
    ))
}

// criterion 11: reruns are byte-identical
fn c11(dir: &std::path::Path) -> Result<String, String> {
    let mk = |sub: &str| {
        let d = dir.join(sub);
        std::fs::create_dir_all(&d).map_err(|e| e.to_string())?;
        Ok::<_, String>(d)
    };
    let (a, b) = (mk("a")?, mk("b")?);
    for d in [&a, &b] {
        let mut cfg = RunConfig::parse("family=ellipse\na=1.1\nb=0.909\np=2\nh=0.12\nt_levels=24")
            .map_err(|e| e.to_string())?;
        cfg.output_dir = d.clone();
        run_deficits(&cfg).map_err(|e| e.to_string())?;
    }
    let axis = "family=ellipse\na=1.05\nb=0.952\n\n\
                family=ellipse\na=1.1\nb=0.909\n\n\
                family=ellipse\na=1.2\nb=0.833\n";
    for d in [&a, &b] {
        let base = format!(
            "family=disk\nr=1\np=2\nh=0.12\nt_levels=24\noutput_dir={}\n",
            d.display()
        );
        run_sweep(&base, axis).map_err(|e| e.to_string())?;
    }
    for name in ["deficits.json", "sweep.csv"] {
        let xa = std::fs::read(a.join(name)).map_err(|e| e.to_string())?;
        let xb = std::fs::read(b.join(name)).map_err(|e| e.to_string())?;
        require(xa == xb, format!("{name} differs between reruns"))?;
    }
    Ok("deficits.json and sweep.csv byte-identical across reruns".to_string())
}

fn main() {
    let t0 = Instant::now();
    let shared = (|| -> Result<(Vec<Run>, Run, Run), String> {
        let disk: Vec<Run> = [1.5, 2.0, 3.0]
            .iter()
            .map(|&p| run_domain(&DomainSpec::disk(1.0), p, 0.05, 48))
            .collect::<Result<_, _>>()?;
        let ellipse = run_domain(&DomainSpec::ellipse(1.2, 1.0 / 1.2), 2.0, 0.03, 48)?;
        let star = run_domain(&DomainSpec::star(1.0, 0.03, 4), 2.5, 0.03, 48)?;
        Ok((disk, ellipse, star))
    })();

    let tmp = tempfile::tempdir().expect("tempdir");
    let results: Vec<(usize, &str, Result<String, String>)> = match &shared {
        Err(e) => (1..=11)
            .map(|i| (i, "shared solve stage", Err::<String, String>(e.clone())))
            .collect(),
        Ok((disk, ellipse, star)) => {
            let disk_p2 = &disk[1];
            vec![
                (1, "radial solver accuracy on the disk", c1(disk)),
                (2, "level-set flux balance", c2(disk, ellipse)),
                (3, "ball rigidity: all deficits vanish together", c3(disk)),
                (4, "integral identity residual on ellipse and star", c4(ellipse, star)),
                (5, "volume/boundary identity at pi/4 and affine center dependence", c5(disk_p2)),
                (6, "near-critical set measure and its power law", c6()),
                (7, "level weight lower bound", c7(disk)),
                (8, "deficit nonnegativity across the domain matrix", c8()),
                (9, "asymmetry sweep trend", c9(&tmp.path().join("sweep"))),
                (10, "gradient sup norm vs a priori bound", c10(disk_p2)),
                (11, "byte-identical reruns", c11(&tmp.path().join("det"))),
            ]
        }
    };

    let mut failures = 0;
    for (id, what, res) in &results {
        match res {
            Ok(detail) => println!("criterion {id} PASS: {what} ({detail})"),
            Err(why) => {
                failures += 1;
                println!("criterion {id} FAIL: {what} ({why})");
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        results.len() - failures,
        results.len(),
        t0.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
