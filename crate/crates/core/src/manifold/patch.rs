use super::Manifold;
use nalgebra::DMatrix;
use std::sync::Arc;

type MetricFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// A single coordinate patch with a user-supplied metric. Not compact;
/// meant for local computations such as the polar chart of the sphere.
#[derive(Clone)]
pub struct CoordinatePatch {
    pub name: String,
    pub dim: usize,
    metric: Arc<MetricFn>,
    periods: Vec<Option<f64>>,
    injectivity: f64,
}

impl CoordinatePatch {
    pub fn new(name: &str, dim: usize, metric: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self { name: name.into(), dim, metric: Arc::new(metric), periods: vec![None; dim], injectivity: 1.0 }
    }

    pub fn with_periods(mut self, periods: Vec<Option<f64>>) -> Self {
        self.periods = periods;
        self
    }

    pub fn with_injectivity_radius(mut self, r: f64) -> Self {
        self.injectivity = r;
        self
    }

    /// Unit sphere in polar coordinates (theta, phi).
    pub fn polar_sphere() -> Self {
        Self::new("unit sphere, polar chart", 2, |x| {
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, x[0].sin().powi(2)])
        })
        .with_periods(vec![None, Some(std::f64::consts::TAU)])
    }

    /// Euclidean space in Cartesian coordinates.
    pub fn euclidean(dim: usize) -> Self {
        Self::new("euclidean", dim, move |_| DMatrix::identity(dim, dim)).with_injectivity_radius(f64::INFINITY)
    }
}

impl Manifold for CoordinatePatch {
    fn dim(&self) -> usize {
        self.dim
    }

    fn metric(&self, _chart: usize, x: &[f64]) -> DMatrix<f64> {
        (self.metric)(x)
    }

    fn periods(&self, _chart: usize) -> Vec<Option<f64>> {
        self.periods.clone()
    }

    fn injectivity_radius(&self) -> f64 {
        self.injectivity
    }

    fn volume(&self) -> f64 {
        f64::NAN
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}
