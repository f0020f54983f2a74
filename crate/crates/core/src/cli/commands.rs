use super::config::ExperimentConfig;
use super::verify::{run_suite, CheckOutcome, Fault, VerifyOptions};
use crate::error::{Error, Result};
use crate::fullsolve::{assemble, continuation, newton_solve, SolveReport};
use crate::ground_state::solve_ground_state;
use crate::lift::{hm_condition_check, lift_field, lift_warped, morphism_commutation_check, random_product_point, PointScalar, Submersion};
use crate::manifold::{normalize, Point, RoundSphere};
use crate::numerics::loglog_slope;
use crate::reduction::{gamma, landscape};
use rand::{Rng, SeedableRng};
use serde::Serialize;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Success,
    NumericalFailure,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub status: Status,
    pub outputs: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a ExperimentConfig,
    status: Status,
    outputs: &'a [PathBuf],
    summary: &'a serde_json::Value,
    wall_time_seconds: f64,
}

fn create(dir: &Path, name: &str, outputs: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path)?;
    outputs.push(path);
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T, outputs: &mut Vec<PathBuf>) -> Result<()> {
    let w = create(dir, name, outputs)?;
    serde_json::to_writer_pretty(w, value)?;
    Ok(())
}

/// Runs a command and writes `manifest.json` next to its outputs.
pub fn run(command: &str, cfg: &ExperimentConfig) -> Result<Outcome> {
    let start = Instant::now();
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir)?;
    let outcome = match command {
        "ground-state" => ground_state(cfg, &dir),
        "landscape" => cmd_landscape(cfg, &dir),
        "solve" => solve(cfg, &dir),
        "lift" => lift(cfg, &dir),
        "verify" => verify(cfg, &dir),
        other => Err(Error::Config(format!("unknown command {other}"))),
    }?;
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        status: outcome.status,
        outputs: &outcome.outputs,
        summary: &outcome.summary,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let f = File::create(dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(BufWriter::new(f), &manifest)?;
    Ok(outcome)
}

fn ground_state(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let (n, p) = (cfg.problem.n, cfg.problem.p);
    let prof = solve_ground_state(n, p, cfg.tolerances.shooting)?;
    let mut outputs = Vec::new();
    prof.write_csv(create(dir, "profile.csv", &mut outputs)?)?;
    let moment = prof.moment(p)?;
    let summary = serde_json::json!({
        "header": prof.header(),
        "u0": prof.peak(),
        "integral_u_p": moment,
        "c_p": prof.energy_constant(),
    });
    write_json(dir, "profile.json", &summary, &mut outputs)?;
    println!("U(0) = {:.12}", prof.peak());
    println!("int U^p = {moment:.12}");
    println!("C_p = {:.12}", prof.energy_constant());
    Ok(Outcome { status: Status::Success, outputs, summary })
}

#[derive(Serialize)]
struct FitRow {
    eps: f64,
    max_deviation: f64,
    converged: usize,
    samples: usize,
}

fn cmd_landscape(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let (n, p) = (cfg.problem.n, cfg.problem.p);
    let prof = Arc::new(solve_ground_state(n, p, cfg.tolerances.shooting)?);
    let pr = cfg.problem(prof)?;
    let opts = cfg.landscape_options();
    let mut outputs = Vec::new();
    let mut rows = Vec::new();
    let mut degenerate = false;
    for &eps in &cfg.schedule.eps {
        let sp = assemble(&pr, eps)?;
        let l = landscape(&sp, &opts)?;
        l.write_csv(create(dir, &format!("landscape_eps{eps}.csv"), &mut outputs)?)?;
        write_json(dir, &format!("critical_eps{eps}.json"), &l, &mut outputs)?;
        degenerate |= l.degenerate;
        let conv: Vec<_> = l.samples.iter().filter(|s| s.converged).collect();
        let dev = if conv.is_empty() { f64::NAN } else { conv.iter().map(|s| (s.jtilde - l.c_p * s.gamma).abs()).fold(0.0, f64::max) };
        println!("eps = {eps}: {} of {} samples converged, max |J - C_p Gamma| = {dev:.3e}", conv.len(), l.samples.len());
        rows.push(FitRow { eps, max_deviation: dev, converged: conv.len(), samples: l.samples.len() });
    }
    // stages without a converged sample carry no information
    let fit: Vec<&FitRow> = rows.iter().filter(|r| r.converged > 0 && r.max_deviation > 0.0).collect();
    let slope = if fit.len() >= 2 && !degenerate {
        let e: Vec<f64> = fit.iter().map(|r| r.eps).collect();
        let d: Vec<f64> = fit.iter().map(|r| r.max_deviation).collect();
        Some(loglog_slope(&e, &d))
    } else {
        None
    };
    if degenerate {
        println!("degenerate landscape: Gamma is flat");
    }
    if let Some(s) = slope {
        println!("fitted order of |J - C_p Gamma| in eps: {s:.3}");
    }
    let summary = serde_json::json!({ "degenerate": degenerate, "slope": slope, "stages": rows });
    write_json(dir, "fit_summary.json", &summary, &mut outputs)?;
    let any = rows.iter().any(|r| r.converged > 0);
    Ok(Outcome { status: if any { Status::Success } else { Status::NumericalFailure }, outputs, summary })
}

/// Nodal values from a solution CSV (last column, node order).
pub fn read_solution(path: &Path) -> Result<Vec<f64>> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let v = rec.get(rec.len().saturating_sub(1)).unwrap_or("");
        out.push(v.trim().parse().map_err(|_| Error::Config(format!("{}: bad value {v:?}", path.display())))?);
    }
    Ok(out)
}

fn solve(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let (n, p) = (cfg.problem.n, cfg.problem.p);
    let prof = Arc::new(solve_ground_state(n, p, cfg.tolerances.shooting)?);
    let pr = cfg.problem(prof)?;
    let schedule = &cfg.schedule.eps;
    let newton = cfg.newton_options();
    let reduction = cfg.reduction_options();
    let xi0 = Point::new(0, cfg.solve.xi0.clone().unwrap_or_else(|| vec![0.0; n]));
    let mut reports: Vec<SolveReport> = Vec::new();
    let mut solutions = Vec::new();
    let mut failure = None;
    let mut rest: &[f64] = schedule;
    let mut center = xi0.clone();
    if cfg.solve.seed != "ansatz" {
        let sp = assemble(&pr, schedule[0])?;
        let seed = if cfg.solve.seed == "zero" {
            vec![0.0; sp.len()]
        } else {
            let v = read_solution(cfg.solve.seed_file.as_ref().expect("validated"))?;
            if v.len() != sp.len() {
                return Err(Error::MeshMismatch);
            }
            v
        };
        match newton_solve(&sp, &seed, None, &newton) {
            Ok((u, rep)) => {
                center = Point::new(0, rep.peak.position.clone());
                reports.push(rep);
                solutions.push(u);
                rest = &schedule[1..];
            }
            Err(e) => {
                failure = Some(format!("eps = {}: {e}", schedule[0]));
                rest = &[];
            }
        }
    }
    if !rest.is_empty() {
        let c = continuation(&pr, rest, &center, &reduction, &newton)?;
        reports.extend(c.reports);
        solutions.extend(c.solutions);
        failure = c.failure;
    }
    let mut outputs = Vec::new();
    for (r, u) in reports.iter().zip(&solutions) {
        u.write_csv(create(dir, &format!("solution_eps{}.csv", r.eps), &mut outputs)?)?;
        let g = gamma(&pr.coeffs, n, p, &r.peak.position).unwrap_or(f64::NAN);
        println!(
            "eps = {}: {} Newton iterations, residual {:.2e}, peak at {:?}, height {:.6}, Gamma {:.6}",
            r.eps, r.iterations, r.residual, r.peak.position, r.peak.height, g
        );
    }
    let summary_csv = crate::fullsolve::ContinuationResult { reports: reports.clone(), solutions: Vec::new(), failure: failure.clone() };
    summary_csv.write_csv(create(dir, "continuation.csv", &mut outputs)?)?;
    let summary = serde_json::json!({ "reports": reports, "failure": failure });
    write_json(dir, "solve_reports.json", &summary, &mut outputs)?;
    if let Some(f) = &failure {
        eprintln!("stage failed: {f}");
    }
    Ok(Outcome { status: if failure.is_none() { Status::Success } else { Status::NumericalFailure }, outputs, summary })
}

fn lift(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let lc = &cfg.lift;
    let mut rng = rand::rngs::StdRng::seed_from_u64(cfg.output.seed);
    let mut outputs = Vec::new();
    if lc.kind == "warped" {
        let sc = cfg.scenario()?;
        let prof = Arc::new(solve_ground_state(sc.n, cfg.problem.p, cfg.tolerances.shooting)?);
        let mut pr = sc.problem(prof)?;
        pr.nodes_per_eps = cfg.mesh.nodes_per_eps;
        let sp = assemble(&pr, lc.eps)?;
        let mut x = vec![0.0; sc.n];
        x[0] = lc.t0;
        let xi = Point::new(0, x);
        let seed = crate::fullsolve::corrected_ansatz(&sp, &xi, &cfg.reduction_options())?;
        let (u, rep) = newton_solve(&sp, &seed, Some(xi.x.clone()), &cfg.newton_options())?;
        let r = lift_warped(&sp, &u, &sc.total, lc.source_tolerance, lc.samples, &mut rng)?;
        let mut w = csv::Writer::from_writer(create(dir, "lift_report.csv", &mut outputs)?);
        w.write_record(["eps", "p", "source_nodal_residual", "source_residual", "lifted_residual", "ratio", "fiber_derivative", "samples"])?;
        w.write_record([
            format!("{}", r.eps),
            format!("{}", r.p),
            format!("{:.6e}", r.source_nodal_residual),
            format!("{:.6e}", r.source_residual),
            format!("{:.6e}", r.lifted_residual),
            format!("{:.6}", r.ratio),
            format!("{:.3e}", r.fiber_derivative),
            r.samples.to_string(),
        ])?;
        w.flush()?;
        lift_field(&u, &sc.total, lc.fiber_nodes)?.write_csv(create(dir, "lifted_field.csv", &mut outputs)?)?;
        let ok = r.lifted_residual <= lc.bound_factor * r.source_residual;
        println!(
            "source residual {:.3e} (nodes {:.3e}), lifted residual {:.3e}, ratio {:.3}",
            r.source_residual, r.source_nodal_residual, r.lifted_residual, r.ratio
        );
        let summary = serde_json::json!({ "scenario": sc, "solve": rep, "lift": r, "passed": ok });
        write_json(dir, "lift.json", &summary, &mut outputs)?;
        return Ok(Outcome { status: if ok { Status::Success } else { Status::NumericalFailure }, outputs, summary });
    }
    let (sub, fields, samples): (Submersion, Vec<PointScalar>, Vec<Point>) = if lc.kind == "hopf" {
        let s = Submersion::hopf();
        let s2 = RoundSphere::new(2, 0.5)?;
        let fields = (0..5)
            .map(|_| {
                let w: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
                let sp = s2.clone();
                let f: PointScalar = Arc::new(move |p: &Point| {
                    let y = sp.embed(p);
                    (y[0] * w[0] + y[1] * w[1]).sin() + w[2] * y[2] * y[0]
                });
                f
            })
            .collect();
        let pts = (0..lc.samples.min(200))
            .map(|_| {
                let mut p = Point::new(0, (0..3).map(|_| rng.random_range(-1.0..1.0)).collect());
                normalize(s.source.as_ref(), &mut p, None);
                p
            })
            .collect();
        (s, fields, pts)
    } else {
        let sc = cfg.scenario()?;
        let s = Submersion::warped_fiber_projection(&sc.total);
        let fields: Vec<PointScalar> = (0..5)
            .map(|j| {
                let (a, b) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let f: PointScalar = Arc::new(move |p: &Point| a * ((j + 1) as f64 * p.x[0]).sin() + b * p.x[0].cos());
                f
            })
            .collect();
        let pts = (0..lc.samples.min(200)).map(|_| random_product_point(&sc.total, &mut rng)).collect();
        (s, fields, pts)
    };
    let sub = if lc.dilation == "inverse-square" {
        let lam = sub.dilation.clone();
        sub.with_dilation("inverse-square", Arc::new(move |p| lam(p).powi(2)))
    } else {
        sub
    };
    let commutation = morphism_commutation_check(&sub, &fields, &samples, 5e-3)?;
    let hm = hm_condition_check(&sub, &samples, 1e-3)?;
    let mut w = csv::Writer::from_writer(create(dir, "morphism_report.csv", &mut outputs)?);
    w.write_record(["check", "value", "bound", "passed"])?;
    let rows = [("commutation", commutation), ("hm_equation", hm.equation), ("conformality", hm.conformality)];
    for (name, v) in rows {
        w.write_record([name.to_string(), format!("{v:.6e}"), format!("{:e}", lc.check_bound), (v <= lc.check_bound).to_string()])?;
        println!("{name}: {v:.3e}");
    }
    w.flush()?;
    let ok = rows.iter().all(|r| r.1 <= lc.check_bound);
    let summary = serde_json::json!({ "map": sub.name, "commutation": commutation, "hm": hm, "passed": ok });
    write_json(dir, "morphism.json", &summary, &mut outputs)?;
    Ok(Outcome { status: if ok { Status::Success } else { Status::NumericalFailure }, outputs, summary })
}

pub fn print_table(rows: &[CheckOutcome]) {
    let w = rows.iter().map(|r| r.module.len() + r.name.len() + 3).max().unwrap_or(0);
    for r in rows {
        let label = format!("{} / {}", r.module, r.name);
        println!("{} {label:<w$} {}", if r.passed { "PASS" } else { "FAIL" }, r.detail);
    }
}

fn verify(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let opts = VerifyOptions {
        fault: cfg.verify.fault.as_ref().map(|_| Fault::GammaExponent),
        halve_mesh: cfg.verify.halve_mesh,
        seed: cfg.output.seed,
    };
    let rows = run_suite(&opts)?;
    print_table(&rows);
    let failures = rows.iter().filter(|r| !r.passed).count();
    println!("{} checks, {failures} failures", rows.len());
    let mut outputs = Vec::new();
    let mut w = csv::Writer::from_writer(create(dir, "verify.csv", &mut outputs)?);
    w.write_record(["module", "check", "passed", "detail"])?;
    for r in &rows {
        w.write_record([r.module, r.name, if r.passed { "true" } else { "false" }, &r.detail])?;
    }
    w.flush()?;
    let summary = serde_json::json!({ "options": opts, "failures": failures, "checks": rows });
    Ok(Outcome { status: if failures == 0 { Status::Success } else { Status::NumericalFailure }, outputs, summary })
}
