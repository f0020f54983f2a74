use crate::ansatz::EpsSpace;
use crate::error::{Error, Result};
use crate::grid::{DiscreteField, PeriodicGrid, TrigInterpolant};
use crate::manifold::{gradient_fd, laplacian_fd, Manifold, Point, WarpedProduct};
use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;
use std::sync::Arc;

/// Max over base points of |div_g(f^k grad u) - f^k (lap_g u + k g(grad f / f, grad u))|.
/// The left side is a nested second-order divergence-form difference, the
/// right side uses fourth-order differences and the analytic grad f, so the
/// deviation decays like h^2.
pub fn warped_identity_check(wp: &WarpedProduct, u: &dyn Fn(&[f64]) -> f64, samples: &[Point], h: f64) -> f64 {
    let base = wp.base.as_ref();
    let n = base.dim();
    let k = wp.fiber_dim() as i32;
    samples
        .iter()
        .map(|p| {
            let c = p.chart;
            let flux = |y: &[f64], i: usize| -> f64 {
                let g = base.metric(c, y);
                let sq = g.determinant().sqrt();
                let gi = g.try_inverse().expect("metric is positive definite");
                let (f, _) = (wp.warp)(c, y);
                let mut s = 0.0;
                for j in 0..n {
                    let mut a = y.to_vec();
                    let mut b = y.to_vec();
                    a[j] += h;
                    b[j] -= h;
                    s += gi[(i, j)] * (u(&a) - u(&b)) / (2.0 * h);
                }
                sq * f.powi(k) * s
            };
            let x = &p.x;
            let mut lhs = 0.0;
            for i in 0..n {
                let mut a = x.clone();
                let mut b = x.clone();
                a[i] += h;
                b[i] -= h;
                lhs += (flux(&a, i) - flux(&b, i)) / (2.0 * h);
            }
            lhs /= base.metric(c, x).determinant().sqrt();
            let (f, df) = (wp.warp)(c, x);
            let lap = laplacian_fd(base, c, x, u, h);
            let grad = gradient_fd(base, c, x, u, h);
            let dot: f64 = df.iter().zip(&grad).map(|(a, b)| a * b).sum();
            let rhs = f.powi(k) * (lap + k as f64 * dot / f);
            (lhs - rhs).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftReport {
    pub eps: f64,
    pub p: f64,
    pub base_dim: usize,
    pub fiber_dim: usize,
    /// Sup over base nodes of the spectral residual of the weighted equation.
    pub source_nodal_residual: f64,
    /// Sup over the sampled base points of the weighted residual (finite differences).
    pub source_residual: f64,
    /// Sup over the sampled product points of -eps^2 lap v + v - v^{p-1}.
    pub lifted_residual: f64,
    pub ratio: f64,
    /// Largest fiber-directional derivative of the lifted field.
    pub fiber_derivative: f64,
    pub samples: usize,
    pub step: f64,
}

/// Random product point: uniform base chart-0 coordinates over the periods,
/// fiber coordinates uniform over the period or over [-1, 1] when the fiber
/// chart is not periodic.
pub fn random_product_point<R: Rng>(wp: &WarpedProduct, rng: &mut R) -> Point {
    let mut x = Vec::with_capacity(wp.dim());
    for t in wp.periods(0) {
        x.push(match t {
            Some(t) => rng.random_range(0.0..t),
            None => rng.random_range(-1.0..1.0),
        });
    }
    Point::new(0, x)
}

/// Lifts a solution of -eps^2 div(f^k grad u) + f^k u = f^k (u^+)^{p-1} on
/// the base to v = u o pi_M and evaluates the residual of the unweighted
/// equation on the warped product at random points.
pub fn lift_warped<R: Rng>(
    space: &EpsSpace,
    u: &DiscreteField,
    wp: &WarpedProduct,
    tolerance: f64,
    samples: usize,
    rng: &mut R,
) -> Result<LiftReport> {
    if !Arc::ptr_eq(&u.grid, &space.grid) {
        return Err(Error::MeshMismatch);
    }
    let n = wp.base_dim();
    let k = wp.fiber_dim() as i32;
    if space.n() != n {
        return Err(Error::InvalidParameter(format!("base dimension {n} does not match the solve dimension {}", space.n())));
    }
    for i in 0..space.len() {
        let (f, _) = (wp.warp)(0, &space.grid.node(i));
        let fk = f.powi(k);
        let off = [space.a[i], space.b[i], space.c[i]].iter().map(|v| (v - fk).abs()).fold(0.0, f64::max);
        if off > 1e-10 * fk {
            return Err(Error::InvalidParameter("lift_warped needs a = b = c = f^k on the base".into()));
        }
    }
    let nodal = space.strong_residual(&u.values).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(nodal <= tolerance) {
        return Err(Error::SourceNotASolution { residual: nodal, tolerance });
    }
    let pr = &space.problem;
    let eps2 = space.eps * space.eps;
    let it = TrigInterpolant::new(u);
    let ub = |x: &[f64]| it.eval(x);
    let h = space.eps / 40.0;
    let (mut src, mut lifted, mut fiber_der) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let q = random_product_point(wp, rng);
        let xb = &q.x[..n];
        let v = ub(xb);
        let (f, df) = (wp.warp)(0, xb);
        let fk = f.powi(k);
        let lap = laplacian_fd(wp.base.as_ref(), 0, xb, &ub, h);
        let grad = gradient_fd(wp.base.as_ref(), 0, xb, &ub, h);
        let dot: f64 = df.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let div = fk * (lap + k as f64 * dot / f);
        src = src.max((-eps2 * div + fk * v - fk * pr.f(v)).abs());
        let vl = |y: &[f64]| ub(&y[..n]);
        let lap_m = laplacian_fd(wp, 0, &q.x, &vl, h);
        lifted = lifted.max((-eps2 * lap_m + v - pr.f(v)).abs());
        let gm = gradient_fd(wp, 0, &q.x, &vl, h);
        fiber_der = fiber_der.max(gm[n..].iter().fold(0.0f64, |m, d| m.max(d.abs())));
    }
    Ok(LiftReport {
        eps: space.eps,
        p: pr.p(),
        base_dim: n,
        fiber_dim: wp.fiber_dim(),
        source_nodal_residual: nodal,
        source_residual: src,
        lifted_residual: lifted,
        ratio: lifted / src,
        fiber_derivative: fiber_der,
        samples,
        step: h,
    })
}

/// v = u o pi_M on the tensor grid of the base mesh with `fiber_nodes` nodes
/// per fiber axis.
pub fn lift_field(u: &DiscreteField, wp: &WarpedProduct, fiber_nodes: usize) -> Result<DiscreteField> {
    let mut shape = u.grid.shape.clone();
    shape.extend(std::iter::repeat_n(fiber_nodes, wp.fiber_dim()));
    let total: Arc<dyn Manifold> = Arc::new(wp.clone());
    let grid = Arc::new(PeriodicGrid::new(total, shape)?);
    let per_fiber = fiber_nodes.pow(wp.fiber_dim() as u32);
    let values = u.values.iter().flat_map(|&v| std::iter::repeat_n(v, per_fiber)).collect();
    DiscreteField::new(grid, values)
}

/// Mean curvature vector of the fibers {x} x N: -grad f / f, in chart
/// coordinates of the warped product.
pub fn warped_fiber_mean_curvature(wp: &WarpedProduct, p: &Point) -> Vec<f64> {
    let n = wp.base_dim();
    let b = wp.project_base(p);
    let (f, df) = wp.f(&b);
    let gi = wp.base.metric(b.chart, &b.x).try_inverse().expect("metric is positive definite");
    let grad = gi * DVector::from_column_slice(&df);
    let mut out: Vec<f64> = grad.iter().map(|v| -v / f).collect();
    out.resize(n + wp.fiber_dim(), 0.0);
    out
}
