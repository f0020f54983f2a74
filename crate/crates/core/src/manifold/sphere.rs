use super::{Manifold, Point};
use crate::error::{Error, Result};
use crate::numerics::{integrate_gl, unit_sphere_area};
use nalgebra::DMatrix;

/// Round sphere of radius rho in R^{n+1} with two stereographic charts.
/// Chart 0 projects from the south pole (x = 0 is the north pole), chart 1
/// from the north pole; the transition is x -> rho^2 x / |x|^2.
#[derive(Debug, Clone)]
pub struct RoundSphere {
    pub n: usize,
    pub radius: f64,
}

impl RoundSphere {
    pub fn new(n: usize, radius: f64) -> Result<Self> {
        if n < 2 || !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!("sphere needs n >= 2 and radius > 0, got n = {n}, radius = {radius}")));
        }
        Ok(Self { n, radius })
    }

    fn conformal(&self, x: &[f64]) -> f64 {
        let r2 = self.radius * self.radius;
        let s: f64 = x.iter().map(|v| v * v).sum();
        4.0 * r2 * r2 / (r2 + s).powi(2)
    }

    /// Embedding into R^{n+1}.
    pub fn embed(&self, p: &Point) -> Vec<f64> {
        let r2 = self.radius * self.radius;
        let s: f64 = p.x.iter().map(|v| v * v).sum();
        let mut out: Vec<f64> = p.x.iter().map(|v| 2.0 * r2 * v / (r2 + s)).collect();
        let h = self.radius * (r2 - s) / (r2 + s);
        out.push(if p.chart == 0 { h } else { -h });
        out
    }

    /// Chart point of an ambient point on the sphere.
    pub fn from_ambient(&self, y: &[f64]) -> Point {
        let h = y[self.n];
        let (chart, den) = if h >= 0.0 { (0, self.radius + h) } else { (1, self.radius - h) };
        Point::new(chart, y[..self.n].iter().map(|v| self.radius * v / den).collect())
    }

    /// Differential of the embedding, (n+1) x n.
    pub fn embed_jacobian(&self, p: &Point) -> DMatrix<f64> {
        let r2 = self.radius * self.radius;
        let s: f64 = p.x.iter().map(|v| v * v).sum();
        let d = r2 + s;
        let sign = if p.chart == 0 { 1.0 } else { -1.0 };
        DMatrix::from_fn(self.n + 1, self.n, |i, j| {
            if i < self.n {
                let delta = if i == j { 1.0 } else { 0.0 };
                2.0 * r2 * (delta / d - 2.0 * p.x[i] * p.x[j] / (d * d))
            } else {
                -sign * 4.0 * r2 * self.radius * p.x[j] / (d * d)
            }
        })
    }

    pub fn north_pole(&self) -> Point {
        Point::new(0, vec![0.0; self.n])
    }
}

impl Manifold for RoundSphere {
    fn dim(&self) -> usize {
        self.n
    }

    fn chart_count(&self) -> usize {
        2
    }

    fn metric(&self, _chart: usize, x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.n, self.n) * self.conformal(x)
    }

    fn metric_derivative(&self, _chart: usize, x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let r2 = self.radius * self.radius;
        let s: f64 = x.iter().map(|v| v * v).sum();
        let base = -16.0 * r2 * r2 / (r2 + s).powi(3);
        Some(x.iter().map(|xl| DMatrix::identity(self.n, self.n) * (base * xl)).collect())
    }

    fn transition(&self, from: usize, to: usize, x: &[f64]) -> Option<Vec<f64>> {
        if from == to {
            return Some(x.to_vec());
        }
        let s: f64 = x.iter().map(|v| v * v).sum();
        if s < 1e-300 {
            return None;
        }
        let r2 = self.radius * self.radius;
        Some(x.iter().map(|v| r2 * v / s).collect())
    }

    fn transition_jacobian(&self, from: usize, to: usize, x: &[f64]) -> Option<DMatrix<f64>> {
        if from == to {
            return Some(DMatrix::identity(self.n, self.n));
        }
        let s: f64 = x.iter().map(|v| v * v).sum();
        if s < 1e-300 {
            return None;
        }
        let r2 = self.radius * self.radius;
        Some(DMatrix::from_fn(self.n, self.n, |i, j| {
            let d = if i == j { 1.0 } else { 0.0 };
            r2 * (d / s - 2.0 * x[i] * x[j] / (s * s))
        }))
    }

    fn preferred_chart(&self, p: &Point) -> usize {
        let s: f64 = p.x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if s > 1.2 * self.radius {
            1 - p.chart
        } else {
            p.chart
        }
    }

    /// Great circle through the embedded point.
    fn exp_closed(&self, p: &Point, v: &[f64]) -> Option<Point> {
        let x = self.embed(p);
        let w = self.embed_jacobian(p) * nalgebra::DVector::from_column_slice(v);
        let len = w.norm();
        if len == 0.0 {
            return Some(p.clone());
        }
        let th = len / self.radius;
        let y: Vec<f64> = (0..=self.n).map(|i| th.cos() * x[i] + self.radius * th.sin() * w[i] / len).collect();
        let mut q = self.from_ambient(&y);
        if let Some(x) = self.transition(q.chart, p.chart, &q.x) {
            // stay in the chart of p when that chart is preferred there
            let cand = Point::new(p.chart, x);
            if self.preferred_chart(&cand) == p.chart {
                q = cand;
            }
        }
        Some(q)
    }

    fn log_closed(&self, p: &Point, q: &Point) -> Option<Vec<f64>> {
        let x = self.embed(p);
        let y = self.embed(q);
        let r2 = self.radius * self.radius;
        let c = (x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / r2).clamp(-1.0, 1.0);
        let u: Vec<f64> = x.iter().zip(&y).map(|(a, b)| b - c * a).collect();
        let un = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if un == 0.0 {
            return Some(vec![0.0; self.n]);
        }
        // atan2 is accurate for both small and large angles
        let th = un.atan2(c * self.radius);
        let th = th.max(0.0);
        let scale = self.radius * th / un;
        let w = nalgebra::DVector::from_iterator(self.n + 1, u.iter().map(|v| v * scale));
        let v = self.embed_jacobian(p).transpose() * w / self.conformal(&p.x);
        Some(v.as_slice().to_vec())
    }

    fn chart_scale(&self) -> f64 {
        self.radius
    }

    fn injectivity_radius(&self) -> f64 {
        std::f64::consts::PI * self.radius
    }

    /// Volume by quadrature over the two hemispheres |x| <= rho.
    fn volume(&self) -> f64 {
        let n = self.n as i32;
        let hemi = unit_sphere_area(self.n)
            * integrate_gl(|t| self.conformal(&[t]).powf(self.n as f64 / 2.0) * t.powi(n - 1), 0.0, self.radius, 64, 8);
        2.0 * hemi
    }

    /// Two-dimensional spheres only: polar quadrature over both hemispheres.
    fn integrate(&self, f: &dyn Fn(&Point) -> f64) -> Option<f64> {
        if self.n != 2 {
            return None;
        }
        let (xr, wr) = crate::numerics::gauss_legendre(24);
        let panels = 8;
        let hr = self.radius / panels as f64;
        let m = 64;
        let mut s = 0.0;
        for chart in 0..2 {
            for k in 0..panels {
                for (xi, wi) in xr.iter().zip(&wr) {
                    let r = hr * (k as f64 + 0.5 * (1.0 + xi));
                    let w = wi * 0.5 * hr * r * self.conformal(&[r]) * std::f64::consts::TAU / m as f64;
                    for j in 0..m {
                        let th = std::f64::consts::TAU * j as f64 / m as f64;
                        s += w * f(&Point::new(chart, vec![r * th.cos(), r * th.sin()]));
                    }
                }
            }
        }
        Some(s)
    }

    fn describe(&self) -> String {
        format!("round sphere S^{} of radius {}", self.n, self.radius)
    }
}
