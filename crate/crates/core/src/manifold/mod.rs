//! Charted compact manifolds: metrics, Christoffel symbols, geodesics,
//! exponential and logarithm maps, and finite-difference Laplacians.
//!
//! A point carries the index of the chart its coordinates refer to.
//! Geodesics are integrated in coordinates and hop charts whenever the
//! manifold prefers a different chart for the current position.

mod checks;
mod curve;
mod patch;
mod sphere;
mod torus;
mod warped;

pub use checks::{expe_check, metric_compatibility, normal_expansion_check, ExpEReport, ExpansionReport};
pub use curve::{CurveManifold, GeneratingCurve};
pub use patch::CoordinatePatch;
pub use sphere::RoundSphere;
pub use torus::FlatTorus;
pub use warped::{build_surface_of_revolution, WarpFn, WarpedProduct};

use crate::error::{Error, Result};
use crate::numerics::spd_inv_sqrt;
use crate::ode::{integrate, OdeOptions, StepControl};
use nalgebra::{DMatrix, DVector};
use std::cell::Cell;

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub chart: usize,
    pub x: Vec<f64>,
}

impl Point {
    pub fn new(chart: usize, x: Vec<f64>) -> Self {
        Self { chart, x }
    }
}

pub trait Manifold: Send + Sync {
    fn dim(&self) -> usize;

    fn chart_count(&self) -> usize {
        1
    }

    fn metric(&self, chart: usize, x: &[f64]) -> DMatrix<f64>;

    /// Partial derivatives d_l g, when known in closed form.
    fn metric_derivative(&self, _chart: usize, _x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        None
    }

    /// Coordinates of the same point in another chart.
    fn transition(&self, from: usize, to: usize, x: &[f64]) -> Option<Vec<f64>> {
        (from == to).then(|| x.to_vec())
    }

    /// Jacobian of the transition map; 4th-order differences by default.
    fn transition_jacobian(&self, from: usize, to: usize, x: &[f64]) -> Option<DMatrix<f64>> {
        let n = self.dim();
        let h = 1e-4 * self.chart_scale();
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let at = |s: f64| {
                let mut y = x.to_vec();
                y[j] += s * h;
                self.transition(from, to, &y)
            };
            let (p1, m1, p2, m2) = (at(1.0)?, at(-1.0)?, at(2.0)?, at(-2.0)?);
            for i in 0..n {
                jac[(i, j)] = (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * h);
            }
        }
        Some(jac)
    }

    /// Chart in which this point is best represented.
    fn preferred_chart(&self, p: &Point) -> usize {
        p.chart
    }

    /// Period of each coordinate of a chart (None for non-periodic axes).
    fn periods(&self, _chart: usize) -> Vec<Option<f64>> {
        vec![None; self.dim()]
    }

    fn chart_scale(&self) -> f64 {
        1.0
    }

    /// Lower bound for the injectivity radius.
    fn injectivity_radius(&self) -> f64;

    fn volume(&self) -> f64;

    /// Integral of a function against the Riemannian volume, when a
    /// quadrature is available.
    fn integrate(&self, _f: &dyn Fn(&Point) -> f64) -> Option<f64> {
        None
    }

    fn exp_closed(&self, _p: &Point, _v: &[f64]) -> Option<Point> {
        None
    }

    fn log_closed(&self, _p: &Point, _q: &Point) -> Option<Vec<f64>> {
        None
    }

    fn describe(&self) -> String;
}

/// Wraps periodic coordinates into [0, period).
pub fn wrap_point<M: Manifold + ?Sized>(m: &M, p: &mut Point) {
    for (x, per) in p.x.iter_mut().zip(m.periods(p.chart)) {
        if let Some(t) = per {
            *x = x.rem_euclid(t);
        }
    }
}

/// Coordinate difference b - a in one chart, using the nearest periodic image.
pub fn chart_difference<M: Manifold + ?Sized>(m: &M, chart: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .zip(m.periods(chart))
        .map(|((a, b), per)| {
            let d = b - a;
            match per {
                Some(t) => d - t * (d / t).round(),
                None => d,
            }
        })
        .collect()
}

/// Expresses a point in the given chart.
pub fn to_chart<M: Manifold + ?Sized>(m: &M, p: &Point, chart: usize) -> Result<Point> {
    let x = m.transition(p.chart, chart, &p.x).ok_or_else(|| Error::OutsideAtlas(p.x.clone()))?;
    let mut q = Point::new(chart, x);
    wrap_point(m, &mut q);
    Ok(q)
}

/// Moves a point and a tangent vector to the preferred chart. Returns true if the chart changed.
pub fn normalize<M: Manifold + ?Sized>(m: &M, p: &mut Point, v: Option<&mut [f64]>) -> bool {
    wrap_point(m, p);
    let to = m.preferred_chart(p);
    if to == p.chart {
        return false;
    }
    let (Some(x), Some(jac)) = (m.transition(p.chart, to, &p.x), m.transition_jacobian(p.chart, to, &p.x)) else {
        return false;
    };
    if let Some(v) = v {
        let w = &jac * DVector::from_column_slice(v);
        v.copy_from_slice(w.as_slice());
    }
    p.chart = to;
    p.x = x;
    wrap_point(m, p);
    true
}

pub fn metric_at<M: Manifold + ?Sized>(m: &M, p: &Point) -> DMatrix<f64> {
    m.metric(p.chart, &p.x)
}

pub fn norm_g<M: Manifold + ?Sized>(m: &M, p: &Point, v: &[f64]) -> f64 {
    let g = metric_at(m, p);
    let v = DVector::from_column_slice(v);
    (v.transpose() * g * &v)[0].sqrt()
}

/// d_l g_ij for l = 0..n, analytic when available.
pub fn metric_derivatives<M: Manifold + ?Sized>(m: &M, chart: usize, x: &[f64]) -> Vec<DMatrix<f64>> {
    if let Some(d) = m.metric_derivative(chart, x) {
        return d;
    }
    let h = 1e-5 * m.chart_scale();
    (0..m.dim())
        .map(|l| {
            let at = |s: f64| {
                let mut y = x.to_vec();
                y[l] += s * h;
                m.metric(chart, &y)
            };
            (at(1.0) - at(-1.0)) * (8.0 / (12.0 * h)) - (at(2.0) - at(-2.0)) * (1.0 / (12.0 * h))
        })
        .collect()
}

/// Christoffel symbols as gamma[k][i][j].
pub fn christoffels<M: Manifold + ?Sized>(m: &M, chart: usize, x: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let n = m.dim();
    let ginv = m.metric(chart, x).try_inverse().expect("metric is positive definite");
    let dg = metric_derivatives(m, chart, x);
    let mut gam = vec![vec![vec![0.0; n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                gam[k][i][j] = 0.5 * s;
                gam[k][j][i] = 0.5 * s;
            }
        }
    }
    gam
}

fn geodesic_rhs<M: Manifold + ?Sized>(m: &M, chart: usize, y: &[f64]) -> Vec<f64> {
    let n = m.dim();
    let (x, v) = y.split_at(n);
    let gam = christoffels(m, chart, x);
    let mut out = v.to_vec();
    for k in 0..n {
        let mut a = 0.0;
        for i in 0..n {
            for j in 0..n {
                a += gam[k][i][j] * v[i] * v[j];
            }
        }
        out.push(-a);
    }
    out
}

fn geodesic_options() -> OdeOptions {
    OdeOptions { rtol: 1e-12, atol: 1e-13, initial_step: 1e-2, max_step: 0.1, max_steps: 200_000 }
}

/// Follows the geodesic from (p, v) for time t; returns the end point and velocity.
pub fn geodesic<M: Manifold + ?Sized>(m: &M, p: &Point, v: &[f64], t: f64) -> Result<(Point, Vec<f64>)> {
    let mut start = p.clone();
    let mut v0 = v.to_vec();
    normalize(m, &mut start, Some(&mut v0));
    let chart = Cell::new(start.chart);
    let n = m.dim();
    let f = |_t: f64, y: &[f64]| geodesic_rhs(m, chart.get(), y);
    let mut y0 = start.x.clone();
    y0.extend_from_slice(&v0);
    let mut failed = false;
    let (_, y) = integrate(&f, 0.0, &y0, t, &geodesic_options(), |_, y| {
        if !y.iter().all(|c| c.is_finite()) {
            failed = true;
            return StepControl::Stop;
        }
        let (xs, vs) = y.split_at_mut(n);
        let mut q = Point::new(chart.get(), xs.to_vec());
        if normalize(m, &mut q, Some(vs)) {
            xs.copy_from_slice(&q.x);
            chart.set(q.chart);
            return StepControl::Modified;
        }
        StepControl::Continue
    })?;
    if failed {
        return Err(Error::LeavesAtlas);
    }
    let mut q = Point::new(chart.get(), y[..n].to_vec());
    let mut w = y[n..].to_vec();
    normalize(m, &mut q, Some(&mut w));
    Ok((q, w))
}

/// Riemannian exponential map exp_p(v).
pub fn exp_map<M: Manifold + ?Sized>(m: &M, p: &Point, v: &[f64]) -> Result<Point> {
    if let Some(q) = m.exp_closed(p, v) {
        return Ok(q);
    }
    Ok(geodesic(m, p, v, 1.0)?.0)
}

/// Inverse of the exponential map; closed forms when the manifold has them,
/// damped Newton shooting otherwise.
pub fn log_map<M: Manifold + ?Sized>(m: &M, p: &Point, q: &Point) -> Result<Vec<f64>> {
    if let Some(v) = m.log_closed(p, q) {
        return Ok(v);
    }
    newton_log_map(m, p, q)
}

/// Damped Newton shooting on v -> exp_p(v), continued along the coordinate
/// segment from p to q in the chart of p.
pub fn newton_log_map<M: Manifold + ?Sized>(m: &M, p: &Point, q: &Point) -> Result<Vec<f64>> {
    let target = to_chart(m, q, p.chart)?;
    let full = chart_difference(m, p.chart, &p.x, &target.x);
    let stages = 4;
    let mut v = vec![0.0; m.dim()];
    for s in 1..=stages {
        let frac = s as f64 / stages as f64;
        let goal: Vec<f64> = p.x.iter().zip(&full).map(|(a, d)| a + frac * d).collect();
        if s == 1 {
            v = full.iter().map(|d| frac * d).collect();
        }
        v = shoot_to(m, p, &goal, v)?;
    }
    Ok(v)
}

fn shoot_to<M: Manifold + ?Sized>(m: &M, p: &Point, goal: &[f64], mut v: Vec<f64>) -> Result<Vec<f64>> {
    let n = m.dim();
    let miss = |v: &[f64]| -> Result<Vec<f64>> {
        let e = exp_map(m, p, v)?;
        let e = to_chart(m, &e, p.chart)?;
        Ok(chart_difference(m, p.chart, goal, &e.x))
    };
    let scale = m.chart_scale();
    let mut r = miss(&v)?;
    let mut rn = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    for it in 0..60 {
        if rn < 1e-13 * scale {
            return Ok(v);
        }
        let h = 1e-6 * scale;
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut vp = v.clone();
            let mut vm = v.clone();
            vp[j] += h;
            vm[j] -= h;
            let (a, b) = (miss(&vp)?, miss(&vm)?);
            for i in 0..n {
                jac[(i, j)] = (a[i] - b[i]) / (2.0 * h);
            }
        }
        let step = jac
            .lu()
            .solve(&DVector::from_column_slice(&r))
            .ok_or(Error::NonConvergence { what: "log map Jacobian singular".into(), iterations: it })?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = v.iter().zip(step.iter()).map(|(a, s)| a - lambda * s).collect();
            if let Ok(rt) = miss(&trial) {
                let tn = rt.iter().map(|x| x * x).sum::<f64>().sqrt();
                if tn < rn {
                    v = trial;
                    r = rt;
                    rn = tn;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-4 {
                if rn < 1e-10 * scale {
                    return Ok(v);
                }
                return Err(Error::NonConvergence { what: "log map line search".into(), iterations: it });
            }
        }
    }
    if rn < 1e-10 * scale {
        Ok(v)
    } else {
        Err(Error::NonConvergence { what: "log map".into(), iterations: 60 })
    }
}

pub fn distance<M: Manifold + ?Sized>(m: &M, p: &Point, q: &Point) -> Result<f64> {
    let v = log_map(m, p, q)?;
    Ok(norm_g(m, p, &v))
}

/// Orthonormal frame at p: the columns of g^{-1/2}.
pub fn orthonormal_frame<M: Manifold + ?Sized>(m: &M, p: &Point) -> DMatrix<f64> {
    spd_inv_sqrt(&metric_at(m, p))
}

/// Point with normal coordinates y at p with respect to `frame`.
pub fn normal_point<M: Manifold + ?Sized>(m: &M, p: &Point, frame: &DMatrix<f64>, y: &[f64]) -> Result<Point> {
    let v = frame * DVector::from_column_slice(y);
    exp_map(m, p, v.as_slice())
}

/// Normal coordinates of q at p.
pub fn normal_coords<M: Manifold + ?Sized>(m: &M, p: &Point, frame_inv: &DMatrix<f64>, q: &Point) -> Result<Vec<f64>> {
    let v = log_map(m, p, q)?;
    Ok((frame_inv * DVector::from_column_slice(&v)).as_slice().to_vec())
}

/// Laplace-Beltrami operator g^{ij}(d_ij u - Gamma^k_ij d_k u) by 4th-order
/// central differences with step h in chart coordinates.
pub fn laplacian_fd<M: Manifold + ?Sized>(m: &M, chart: usize, x: &[f64], u: &dyn Fn(&[f64]) -> f64, h: f64) -> f64 {
    let n = m.dim();
    let ginv = m.metric(chart, x).try_inverse().expect("metric is positive definite");
    let gam = christoffels(m, chart, x);
    let at = |d: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, s) in d {
            y[i] += s * h;
        }
        u(&y)
    };
    let u0 = u(x);
    let mut grad = vec![0.0; n];
    for (k, gk) in grad.iter_mut().enumerate() {
        *gk = (8.0 * (at(&[(k, 1.0)]) - at(&[(k, -1.0)])) - (at(&[(k, 2.0)]) - at(&[(k, -2.0)]))) / (12.0 * h);
    }
    let mut lap = 0.0;
    for i in 0..n {
        for j in i..n {
            let d2 = if i == j {
                (-at(&[(i, 2.0)]) + 16.0 * at(&[(i, 1.0)]) - 30.0 * u0 + 16.0 * at(&[(i, -1.0)]) - at(&[(i, -2.0)]))
                    / (12.0 * h * h)
            } else {
                let mixed = |s: f64| {
                    at(&[(i, s), (j, s)]) - at(&[(i, s), (j, -s)]) - at(&[(i, -s), (j, s)]) + at(&[(i, -s), (j, -s)])
                };
                (16.0 * mixed(1.0) - mixed(2.0)) / (48.0 * h * h)
            };
            let corr: f64 = (0..n).map(|k| gam[k][i][j] * grad[k]).sum();
            let w = if i == j { 1.0 } else { 2.0 };
            lap += w * ginv[(i, j)] * (d2 - corr);
        }
    }
    lap
}

/// Gradient of a function in chart coordinates (4th-order differences), raised with g^{-1}.
pub fn gradient_fd<M: Manifold + ?Sized>(m: &M, chart: usize, x: &[f64], u: &dyn Fn(&[f64]) -> f64, h: f64) -> Vec<f64> {
    let n = m.dim();
    let d: Vec<f64> = (0..n)
        .map(|k| {
            let at = |s: f64| {
                let mut y = x.to_vec();
                y[k] += s * h;
                u(&y)
            };
            (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * h)
        })
        .collect();
    let ginv = m.metric(chart, x).try_inverse().expect("metric is positive definite");
    (ginv * DVector::from_column_slice(&d)).as_slice().to_vec()
}

#[cfg(test)]
mod tests;
