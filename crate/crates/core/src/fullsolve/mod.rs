//! Newton solves of the full problem, continuation in eps and concentration
//! measurements.

mod peak;

pub use peak::{peak_location, PeakInfo};

use crate::ansatz::{EpsSpace, PeakAnsatz, Problem};
use crate::error::{Error, Result};
use crate::grid::DiscreteField;
use crate::linsolve::{minres, norm2};
use crate::manifold::Point;
use crate::reduction::{Reduction, ReductionOptions};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// The discrete operator at eps; warns when the grid has fewer than two
/// nodes per eps (spectral accuracy is lost below that).
pub fn assemble(problem: &Problem, eps: f64) -> Result<EpsSpace> {
    let sp = EpsSpace::new(problem, eps)?;
    let npe = nodes_per_eps(&sp);
    if npe < 2.0 {
        eprintln!("warning: grid resolves eps = {eps} with only {npe:.2} nodes per eps");
    }
    Ok(sp)
}

/// eps over the largest physical node spacing.
pub fn nodes_per_eps(space: &EpsSpace) -> f64 {
    let g = &space.grid;
    let mut worst: f64 = 0.0;
    for d in 0..g.dim() {
        let stretch = (0..g.len()).step_by(7).map(|i| 1.0 / g.inverse_metric(i, d, d)).fold(0.0f64, f64::max).sqrt();
        worst = worst.max(g.spacing(d) * stretch);
    }
    space.eps / worst
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonOptions {
    /// Sup-norm tolerance on -eps^2 div(c grad u) + a u - b f(u).
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub linear_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 30, max_halvings: 20, linear_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub eps: f64,
    pub seed_xi: Option<Vec<f64>>,
    pub grid: Vec<usize>,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub residual: f64,
    pub peak: PeakInfo,
    /// |u - W_{eps, xi_peak}|_eps
    pub distance_to_ansatz: f64,
    pub energy: f64,
    pub min_value: f64,
    pub positive: bool,
    /// max u >= (min a/b)^{1/(p-2)}: the balance a u <= b u^{p-1} at an
    /// interior maximum.
    pub max_principle_bound: f64,
    pub max_principle_ok: bool,
    pub wall_time: f64,
}

fn l2(space: &EpsSpace, u: &[f64]) -> f64 {
    norm2(&space.strong_residual(u)) / (space.len() as f64).sqrt()
}

/// Newton's method with Armijo halving on the residual norm. Linear solves
/// use MINRES: the Jacobian A - b f'(u) is symmetric but indefinite.
pub fn newton_solve(space: &EpsSpace, seed: &[f64], seed_xi: Option<Vec<f64>>, opts: &NewtonOptions) -> Result<(DiscreteField, SolveReport)> {
    let start = Instant::now();
    let pr = &space.problem;
    if seed.len() != space.len() {
        return Err(Error::MeshMismatch);
    }
    let gamma_min = space.a.iter().zip(&space.b).map(|(a, b)| (a / b).powf(1.0 / (pr.p() - 2.0))).fold(f64::INFINITY, f64::min);
    let collapse = 0.1 * gamma_min * pr.profile.peak();
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut u = seed.to_vec();
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        if sup(&u) < collapse {
            return Err(Error::CollapseToZero(sup(&u)));
        }
        let res = space.strong_residual(&u);
        let r = sup(&res);
        history.push(r);
        if r <= opts.tol {
            break;
        }
        if iterations >= opts.max_iter {
            return Err(Error::NonConvergence { what: format!("Newton at residual {r:e}"), iterations });
        }
        iterations += 1;
        let eq = space.equation_residual(&u);
        let bdf: Vec<f64> = u.iter().zip(space.b_weights()).map(|(&x, bw)| bw * pr.df(x)).collect();
        let apply = |x: &[f64]| -> Vec<f64> {
            let mut out = space.apply_a(x);
            for k in 0..x.len() {
                out[k] -= bdf[k] * x[k];
            }
            out
        };
        let rhs: Vec<f64> = eq.iter().map(|v| -v).collect();
        let (delta, _) = minres(&apply, &|v| space.precondition(v), &rhs, opts.linear_tol, 3000)?;
        let r2 = l2(space, &u);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            if l2(space, &trial) <= (1.0 - 1e-4 * lambda) * r2 {
                u = trial;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::Divergence(format!("line search failed at residual {r:e}")));
        }
    }
    let field = space.field(u);
    let peak = peak_location(&field);
    let w = PeakAnsatz::new(space, &Point::new(0, peak.position.clone()))
        .map(|a| {
            let d: Vec<f64> = field.values.iter().zip(&a.w).map(|(x, y)| x - y).collect();
            space.norm(&d)
        })
        .unwrap_or(f64::NAN);
    let min_value = field.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let bound = space.a.iter().zip(&space.b).map(|(a, b)| (a / b).powf(1.0 / (pr.p() - 2.0))).fold(f64::INFINITY, f64::min);
    let report = SolveReport {
        eps: space.eps,
        seed_xi,
        grid: space.grid.shape.clone(),
        iterations,
        residual: *history.last().unwrap(),
        residual_history: history,
        distance_to_ansatz: w,
        energy: space.energy(&field.values),
        min_value,
        positive: min_value > 0.0,
        max_principle_bound: bound,
        max_principle_ok: peak.height >= bound * (1.0 - 1e-6),
        peak,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((field, report))
}

/// W + phi at xi; falls back to W when the fixed point fails.
pub fn corrected_ansatz(space: &EpsSpace, xi: &Point, opts: &ReductionOptions) -> Result<Vec<f64>> {
    let red = Reduction::new(space, xi)?;
    match red.fixed_point(opts, None) {
        Ok(st) => Ok(red.w().iter().zip(&st.phi).map(|(a, b)| a + b).collect()),
        Err(_) => Ok(red.w().to_vec()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationResult {
    pub reports: Vec<SolveReport>,
    #[serde(skip)]
    pub solutions: Vec<DiscreteField>,
    /// Error of the first failed stage, if any.
    pub failure: Option<String>,
}

impl ContinuationResult {
    /// CSV with columns epsilon, peak coordinates, peak height, residual.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let n = self.reports.first().map(|r| r.peak.position.len()).unwrap_or(0);
        let mut head = vec!["epsilon".to_string()];
        head.extend((1..=n).map(|d| format!("peak_{d}")));
        head.extend(["peak_height", "residual", "iterations"].map(String::from));
        wr.write_record(&head)?;
        for r in &self.reports {
            let mut row = vec![format!("{}", r.eps)];
            row.extend(r.peak.position.iter().map(|x| format!("{x:.10e}")));
            row.push(format!("{:.12e}", r.peak.height));
            row.push(format!("{:.3e}", r.residual));
            row.push(r.iterations.to_string());
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Solves along a decreasing eps schedule; each stage is seeded with the
/// corrected ansatz re-centered at the previous peak.
pub fn continuation(
    problem: &Problem,
    schedule: &[f64],
    xi0: &Point,
    reduction: &ReductionOptions,
    newton: &NewtonOptions,
) -> Result<ContinuationResult> {
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("eps schedule must be strictly decreasing".into()));
    }
    let mut out = ContinuationResult { reports: Vec::new(), solutions: Vec::new(), failure: None };
    let mut center = xi0.clone();
    for &eps in schedule {
        let stage = (|| {
            let sp = assemble(problem, eps)?;
            let seed = corrected_ansatz(&sp, &center, reduction)?;
            newton_solve(&sp, &seed, Some(center.x.clone()), newton)
        })();
        match stage {
            Ok((u, rep)) => {
                center = Point::new(0, rep.peak.position.clone());
                out.reports.push(rep);
                out.solutions.push(u);
            }
            Err(e) => {
                out.failure = Some(format!("eps = {eps}: {e}"));
                break;
            }
        }
    }
    Ok(out)
}
