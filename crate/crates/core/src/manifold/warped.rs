use super::{metric_derivatives, CurveManifold, FlatTorus, GeneratingCurve, Manifold, Point, RoundSphere};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::sync::Arc;

/// Warping function on the base: (chart, coords) -> (f, df in chart coordinates).
pub type WarpFn = Arc<dyn Fn(usize, &[f64]) -> (f64, Vec<f64>) + Send + Sync>;

/// M x_{f^2} N with metric g + f^2 h. Chart index = base_chart * fiber_charts + fiber_chart;
/// coordinates are base coordinates followed by fiber coordinates.
#[derive(Clone)]
pub struct WarpedProduct {
    pub base: Arc<dyn Manifold>,
    pub fiber: Arc<dyn Manifold>,
    pub warp: WarpFn,
    /// Bounds of f over the base.
    pub f_range: (f64, f64),
    pub name: String,
}

impl std::fmt::Debug for WarpedProduct {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "WarpedProduct({})", self.name)
    }
}

impl WarpedProduct {
    pub fn new(base: Arc<dyn Manifold>, fiber: Arc<dyn Manifold>, warp: WarpFn, f_range: (f64, f64)) -> Result<Self> {
        if !(f_range.0 > 0.0) {
            return Err(Error::InvalidParameter(format!("warping function must be positive, min f = {}", f_range.0)));
        }
        let name = format!("{} x_f^2 {}", base.describe(), fiber.describe());
        Ok(Self { base, fiber, warp, f_range, name })
    }

    /// Riemannian product (f = 1).
    pub fn product(base: Arc<dyn Manifold>, fiber: Arc<dyn Manifold>) -> Self {
        let n = base.dim();
        let warp: WarpFn = Arc::new(move |_, _| (1.0, vec![0.0; n]));
        Self::new(base, fiber, warp, (1.0, 1.0)).expect("f = 1 is positive")
    }

    /// Unit round fiber S^k (the circle of length 2 pi for k = 1).
    pub fn round_fiber(k: usize) -> Result<Arc<dyn Manifold>> {
        Ok(match k {
            0 => return Err(Error::InvalidParameter("fiber dimension must be at least 1".into())),
            1 => Arc::new(FlatTorus::new(vec![std::f64::consts::TAU])?),
            _ => Arc::new(RoundSphere::new(k, 1.0)?),
        })
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber.dim()
    }

    fn split(&self, chart: usize) -> (usize, usize) {
        let fc = self.fiber.chart_count();
        (chart / fc, chart % fc)
    }

    pub fn join(&self, base: &Point, fiber: &Point) -> Point {
        let mut x = base.x.clone();
        x.extend_from_slice(&fiber.x);
        Point::new(base.chart * self.fiber.chart_count() + fiber.chart, x)
    }

    pub fn project_base(&self, p: &Point) -> Point {
        Point::new(self.split(p.chart).0, p.x[..self.base_dim()].to_vec())
    }

    pub fn project_fiber(&self, p: &Point) -> Point {
        Point::new(self.split(p.chart).1, p.x[self.base_dim()..].to_vec())
    }

    /// f and its coordinate gradient at a base point.
    pub fn f(&self, base: &Point) -> (f64, Vec<f64>) {
        (self.warp)(base.chart, &base.x)
    }
}

impl Manifold for WarpedProduct {
    fn dim(&self) -> usize {
        self.base.dim() + self.fiber.dim()
    }

    fn chart_count(&self) -> usize {
        self.base.chart_count() * self.fiber.chart_count()
    }

    fn metric(&self, chart: usize, x: &[f64]) -> DMatrix<f64> {
        let (bc, fc) = self.split(chart);
        let n = self.base_dim();
        let (f, _) = (self.warp)(bc, &x[..n]);
        let g = self.base.metric(bc, &x[..n]);
        let h = self.fiber.metric(fc, &x[n..]);
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        out.view_mut((0, 0), (n, n)).copy_from(&g);
        out.view_mut((n, n), (h.nrows(), h.ncols())).copy_from(&(h * (f * f)));
        out
    }

    fn metric_derivative(&self, chart: usize, x: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let (bc, fc) = self.split(chart);
        let n = self.base_dim();
        let k = self.fiber_dim();
        let (f, df) = (self.warp)(bc, &x[..n]);
        let dg = metric_derivatives(self.base.as_ref(), bc, &x[..n]);
        let h = self.fiber.metric(fc, &x[n..]);
        let dh = metric_derivatives(self.fiber.as_ref(), fc, &x[n..]);
        let mut out = Vec::with_capacity(n + k);
        for l in 0..n {
            let mut m = DMatrix::zeros(n + k, n + k);
            m.view_mut((0, 0), (n, n)).copy_from(&dg[l]);
            m.view_mut((n, n), (k, k)).copy_from(&(&h * (2.0 * f * df[l])));
            out.push(m);
        }
        for d in dh {
            let mut m = DMatrix::zeros(n + k, n + k);
            m.view_mut((n, n), (k, k)).copy_from(&(d * (f * f)));
            out.push(m);
        }
        Some(out)
    }

    fn transition(&self, from: usize, to: usize, x: &[f64]) -> Option<Vec<f64>> {
        let (b0, f0) = self.split(from);
        let (b1, f1) = self.split(to);
        let n = self.base_dim();
        let mut y = self.base.transition(b0, b1, &x[..n])?;
        y.extend(self.fiber.transition(f0, f1, &x[n..])?);
        Some(y)
    }

    fn transition_jacobian(&self, from: usize, to: usize, x: &[f64]) -> Option<DMatrix<f64>> {
        let (b0, f0) = self.split(from);
        let (b1, f1) = self.split(to);
        let n = self.base_dim();
        let jb = self.base.transition_jacobian(b0, b1, &x[..n])?;
        let jf = self.fiber.transition_jacobian(f0, f1, &x[n..])?;
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        out.view_mut((0, 0), (n, n)).copy_from(&jb);
        out.view_mut((n, n), (jf.nrows(), jf.ncols())).copy_from(&jf);
        Some(out)
    }

    fn preferred_chart(&self, p: &Point) -> usize {
        let b = self.base.preferred_chart(&self.project_base(p));
        let f = self.fiber.preferred_chart(&self.project_fiber(p));
        b * self.fiber.chart_count() + f
    }

    fn periods(&self, chart: usize) -> Vec<Option<f64>> {
        let (bc, fc) = self.split(chart);
        let mut v = self.base.periods(bc);
        v.extend(self.fiber.periods(fc));
        v
    }

    fn chart_scale(&self) -> f64 {
        self.base.chart_scale().min(self.fiber.chart_scale())
    }

    fn injectivity_radius(&self) -> f64 {
        self.base.injectivity_radius().min(self.f_range.0 * self.fiber.injectivity_radius())
    }

    fn volume(&self) -> f64 {
        self.integrate(&|_| 1.0).unwrap_or(f64::NAN)
    }

    /// Nested quadrature: the fiber volume element carries the factor f^k.
    fn integrate(&self, func: &dyn Fn(&Point) -> f64) -> Option<f64> {
        let k = self.fiber_dim() as i32;
        self.base.integrate(&|b: &Point| {
            let (f, _) = self.f(b);
            let inner = self.fiber.integrate(&|q: &Point| func(&self.join(b, q))).unwrap_or(f64::NAN);
            f.powi(k) * inner
        })
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

/// Surface of revolution of a closed curve (y(t), rho(t)) with fiber S^k:
/// the warped product C x_{rho^2} S^k over the curve.
pub fn build_surface_of_revolution(curve: GeneratingCurve, k: usize) -> Result<WarpedProduct> {
    let lo = curve.min_rho();
    if !(lo > 0.0) {
        return Err(Error::CurveTouchesAxis(lo));
    }
    let hi = curve.max_rho();
    let c = curve.clone();
    let warp: WarpFn = Arc::new(move |_, x| {
        let [r, dr, _] = c.rho_derivatives(x[0]);
        (r, vec![dr])
    });
    let base: Arc<dyn Manifold> = Arc::new(CurveManifold::new(curve));
    WarpedProduct::new(base, WarpedProduct::round_fiber(k)?, warp, (lo, hi))
}
