use super::{chart_difference, wrap_point, Manifold, Point};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Flat torus R^n / (T_1 Z x ... x T_n Z) with one periodic chart.
#[derive(Debug, Clone)]
pub struct FlatTorus {
    pub periods: Vec<f64>,
}

impl FlatTorus {
    pub fn new(periods: Vec<f64>) -> Result<Self> {
        if periods.is_empty() || periods.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParameter(format!("torus periods must be positive, got {periods:?}")));
        }
        Ok(Self { periods })
    }
}

impl Manifold for FlatTorus {
    fn dim(&self) -> usize {
        self.periods.len()
    }

    fn metric(&self, _chart: usize, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim())
    }

    fn metric_derivative(&self, _chart: usize, _x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        Some(vec![DMatrix::zeros(self.dim(), self.dim()); self.dim()])
    }

    fn periods(&self, _chart: usize) -> Vec<Option<f64>> {
        self.periods.iter().map(|&t| Some(t)).collect()
    }

    fn chart_scale(&self) -> f64 {
        self.periods.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    fn injectivity_radius(&self) -> f64 {
        0.5 * self.chart_scale()
    }

    fn volume(&self) -> f64 {
        self.periods.iter().product()
    }

    /// Tensor trapezoid rule, spectrally accurate for smooth periodic integrands.
    fn integrate(&self, f: &dyn Fn(&Point) -> f64) -> Option<f64> {
        let m = 64usize;
        let n = self.dim();
        let total = m.pow(n as u32);
        let cell: f64 = self.periods.iter().map(|t| t / m as f64).product();
        let mut s = 0.0;
        for idx in 0..total {
            let mut rem = idx;
            let x = (0..n)
                .map(|i| {
                    let j = rem % m;
                    rem /= m;
                    self.periods[i] * j as f64 / m as f64
                })
                .collect();
            s += f(&Point::new(0, x));
        }
        Some(s * cell)
    }

    fn exp_closed(&self, p: &Point, v: &[f64]) -> Option<Point> {
        let mut q = Point::new(0, p.x.iter().zip(v).map(|(a, b)| a + b).collect());
        wrap_point(self, &mut q);
        Some(q)
    }

    fn log_closed(&self, p: &Point, q: &Point) -> Option<Vec<f64>> {
        Some(chart_difference(self, 0, &p.x, &q.x))
    }

    fn describe(&self) -> String {
        format!("flat torus with periods {:?}", self.periods)
    }
}
