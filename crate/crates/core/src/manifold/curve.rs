use super::{Manifold, Point};
use crate::error::{Error, Result};
use crate::numerics::integrate_gl;
use nalgebra::{DMatrix, DVector};
use std::path::Path;
use std::sync::Arc;

type CurveFn = dyn Fn(f64) -> [Vec<f64>; 3] + Send + Sync;

/// Closed curve t -> (y(t), rho(t)) in R^l x (0, inf), periodic in t.
/// The last component of each returned vector is rho.
#[derive(Clone)]
pub struct GeneratingCurve {
    pub period: f64,
    pub name: String,
    eval: Arc<CurveFn>,
}

impl std::fmt::Debug for GeneratingCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GeneratingCurve({}, period {})", self.name, self.period)
    }
}

impl GeneratingCurve {
    /// `eval(t)` returns the point, first and second derivatives.
    pub fn analytic(name: &str, period: f64, eval: impl Fn(f64) -> [Vec<f64>; 3] + Send + Sync + 'static) -> Self {
        Self { period, name: name.into(), eval: Arc::new(eval) }
    }

    /// Circle of radius `r` around (0, center) in the (y, rho) half-plane;
    /// unit speed when r = 1.
    pub fn circle(center: f64, r: f64) -> Self {
        Self::analytic(&format!("circle rho = {center} + {r} cos t"), std::f64::consts::TAU, move |t| {
            let (s, c) = t.sin_cos();
            [vec![r * s, center + r * c], vec![r * c, -r * s], vec![-r * s, -r * c]]
        })
    }

    /// Constant rho with unit-speed y.
    pub fn cylinder(rho: f64, period: f64) -> Self {
        Self::analytic(&format!("line rho = {rho}"), period, move |t| {
            [vec![t, rho], vec![1.0, 0.0], vec![0.0, 0.0]]
        })
    }

    /// Periodic cubic spline through samples (t_j, point_j); the period is
    /// inferred from the spacing unless the last sample repeats the first.
    pub fn sampled(t: &[f64], points: &[Vec<f64>]) -> Result<Self> {
        let m0 = t.len();
        if m0 < 4 || points.len() != m0 {
            return Err(Error::InvalidParameter("a sampled curve needs at least 4 samples".into()));
        }
        let closed = points[0].iter().zip(&points[m0 - 1]).all(|(a, b)| (a - b).abs() < 1e-12);
        let (m, period) = if closed { (m0 - 1, t[m0 - 1] - t[0]) } else { (m0, t[m0 - 1] - t[0] + (t[1] - t[0])) };
        let dims = points[0].len();
        let h: Vec<f64> = (0..m).map(|i| if i + 1 < m { t[i + 1] - t[i] } else { t[0] + period - t[m - 1] }).collect();
        if h.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidParameter("curve samples must be strictly increasing in t".into()));
        }
        let mut a = DMatrix::zeros(m, m);
        for i in 0..m {
            let hp = h[(i + m - 1) % m];
            a[(i, (i + m - 1) % m)] += hp;
            a[(i, i)] += 2.0 * (hp + h[i]);
            a[(i, (i + 1) % m)] += h[i];
        }
        let lu = a.lu();
        let mut second = vec![vec![0.0; dims]; m];
        for d in 0..dims {
            let y = |i: usize| points[i % m][d];
            let rhs = DVector::from_fn(m, |i, _| {
                let hp = h[(i + m - 1) % m];
                6.0 * ((y(i + 1) - y(i)) / h[i] - (y(i) - y(i + m - 1)) / hp)
            });
            let mm = lu.solve(&rhs).ok_or_else(|| Error::InvalidParameter("degenerate curve samples".into()))?;
            for i in 0..m {
                second[i][d] = mm[i];
            }
        }
        let (ts, ps) = (t[..m].to_vec(), points[..m].to_vec());
        let t0 = t[0];
        Ok(Self::analytic("sampled curve", period, move |tq| {
            let s = (tq - t0).rem_euclid(period) + t0;
            let i = ts.partition_point(|&x| x <= s).max(1) - 1;
            let hi = h[i];
            let j = (i + 1) % m;
            let a = (ts[i] + hi - s) / hi;
            let b = 1.0 - a;
            let mut out = [vec![0.0; dims], vec![0.0; dims], vec![0.0; dims]];
            for d in 0..dims {
                let (y0, y1, m0, m1) = (ps[i][d], ps[j][d], second[i][d], second[j][d]);
                out[0][d] = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * hi * hi / 6.0;
                out[1][d] = (y1 - y0) / hi - (3.0 * a * a - 1.0) / 6.0 * hi * m0 + (3.0 * b * b - 1.0) / 6.0 * hi * m1;
                out[2][d] = a * m0 + b * m1;
            }
            out
        }))
    }

    /// Reads columns t, y_1..y_l, rho from a CSV file with a header row.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rd = csv::Reader::from_path(path)?;
        let mut t = Vec::new();
        let mut pts = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidParameter(format!("bad curve row {:?}: {e}", rec)))?;
            if vals.len() < 3 {
                return Err(Error::InvalidParameter("curve rows need t, y..., rho".into()));
            }
            t.push(vals[0]);
            pts.push(vals[1..].to_vec());
        }
        Self::sampled(&t, &pts)
    }

    pub fn eval(&self, t: f64) -> [Vec<f64>; 3] {
        (self.eval)(t)
    }

    pub fn rho(&self, t: f64) -> f64 {
        *self.eval(t)[0].last().unwrap()
    }

    /// (rho, rho', rho'').
    pub fn rho_derivatives(&self, t: f64) -> [f64; 3] {
        let e = self.eval(t);
        [*e[0].last().unwrap(), *e[1].last().unwrap(), *e[2].last().unwrap()]
    }

    pub fn speed_squared(&self, t: f64) -> f64 {
        self.eval(t)[1].iter().map(|v| v * v).sum()
    }

    /// Smallest rho over a fine sample; must be positive.
    pub fn min_rho(&self) -> f64 {
        (0..2000).map(|k| self.rho(self.period * k as f64 / 2000.0)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_rho(&self) -> f64 {
        (0..2000).map(|k| self.rho(self.period * k as f64 / 2000.0)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// The generating curve as a one-dimensional Riemannian manifold with
/// metric |c'(t)|^2 dt^2.
#[derive(Debug, Clone)]
pub struct CurveManifold {
    pub curve: GeneratingCurve,
}

impl CurveManifold {
    pub fn new(curve: GeneratingCurve) -> Self {
        Self { curve }
    }

    pub fn length(&self) -> f64 {
        self.arclength(0.0, self.curve.period)
    }

    /// Signed arclength from t0 to t1 along the parametrization.
    pub fn arclength(&self, t0: f64, t1: f64) -> f64 {
        let panels = ((t1 - t0).abs() / self.curve.period * 256.0).ceil().max(1.0) as usize;
        integrate_gl(|t| self.curve.speed_squared(t).sqrt(), t0, t1, panels, 8)
    }
}

impl Manifold for CurveManifold {
    fn dim(&self) -> usize {
        1
    }

    fn metric(&self, _chart: usize, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, self.curve.speed_squared(x[0]))
    }

    fn metric_derivative(&self, _chart: usize, x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let e = self.curve.eval(x[0]);
        let d: f64 = 2.0 * e[1].iter().zip(&e[2]).map(|(a, b)| a * b).sum::<f64>();
        Some(vec![DMatrix::from_element(1, 1, d)])
    }

    fn periods(&self, _chart: usize) -> Vec<Option<f64>> {
        vec![Some(self.curve.period)]
    }

    fn chart_scale(&self) -> f64 {
        self.curve.period
    }

    fn injectivity_radius(&self) -> f64 {
        0.5 * self.length()
    }

    fn volume(&self) -> f64 {
        self.length()
    }

    fn integrate(&self, f: &dyn Fn(&Point) -> f64) -> Option<f64> {
        let m = 512;
        let h = self.curve.period / m as f64;
        Some(
            (0..m)
                .map(|j| {
                    let t = j as f64 * h;
                    f(&Point::new(0, vec![t])) * self.curve.speed_squared(t).sqrt()
                })
                .sum::<f64>()
                * h,
        )
    }

    /// Unit-speed reparametrization solved by Newton's method.
    fn exp_closed(&self, p: &Point, v: &[f64]) -> Option<Point> {
        let t0 = p.x[0];
        let s = v[0] * self.curve.speed_squared(t0).sqrt();
        let mut t = t0 + v[0];
        for _ in 0..50 {
            let step = (self.arclength(t0, t) - s) / self.curve.speed_squared(t).sqrt();
            t -= step;
            if step.abs() < 1e-14 * self.curve.period {
                break;
            }
        }
        Some(Point::new(0, vec![t.rem_euclid(self.curve.period)]))
    }

    fn log_closed(&self, p: &Point, q: &Point) -> Option<Vec<f64>> {
        let t0 = p.x[0];
        let forward = (q.x[0] - t0).rem_euclid(self.curve.period);
        let mut s = self.arclength(t0, t0 + forward);
        let len = self.length();
        if s > 0.5 * len {
            s -= len;
        }
        Some(vec![s / self.curve.speed_squared(t0).sqrt()])
    }

    fn describe(&self) -> String {
        format!("curve manifold of {}", self.curve.name)
    }
}
