use crate::error::{Error, Result};
use crate::manifold::{christoffels, gradient_fd, laplacian_fd, to_chart, Manifold, Point, RoundSphere, WarpedProduct};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::sync::Arc;

pub type PointMap = Arc<dyn Fn(&Point) -> Point + Send + Sync>;
pub type PointScalar = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type PointVector = Arc<dyn Fn(&Point) -> Vec<f64> + Send + Sync>;

/// A submersion pi from the source (dimension m) onto the target (dimension n)
/// with its dilation lambda. `factor` is mu on the target with mu o pi = lambda^2
/// when one exists; `fiber_curvature` returns the mean curvature vector of the
/// fiber through a source point, in source chart coordinates.
#[derive(Clone)]
pub struct Submersion {
    pub name: String,
    pub source: Arc<dyn Manifold>,
    pub target: Arc<dyn Manifold>,
    pub map: PointMap,
    pub dilation: PointScalar,
    pub factor: Option<PointScalar>,
    pub fiber_curvature: Option<PointVector>,
}

impl std::fmt::Debug for Submersion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Submersion({})", self.name)
    }
}

impl Submersion {
    pub fn identity(m: Arc<dyn Manifold>) -> Self {
        let n = m.dim();
        Self {
            name: format!("identity of {}", m.describe()),
            source: m.clone(),
            target: m,
            map: Arc::new(|p| p.clone()),
            dilation: Arc::new(|_| 1.0),
            factor: Some(Arc::new(|_| 1.0)),
            fiber_curvature: Some(Arc::new(move |_| vec![0.0; n])),
        }
    }

    /// (z1, z2) -> (z1 conj(z2), (|z1|^2 - |z2|^2) / 2) from the unit S^3 onto
    /// S^2(1/2); a Riemannian submersion with great-circle fibers.
    pub fn hopf() -> Self {
        let s3 = Arc::new(RoundSphere::new(3, 1.0).expect("valid sphere"));
        let s2 = Arc::new(RoundSphere::new(2, 0.5).expect("valid sphere"));
        let (src, tgt) = (s3.clone(), s2.clone());
        Self {
            name: "Hopf map S^3 -> S^2(1/2)".into(),
            source: s3,
            target: s2,
            map: Arc::new(move |p| {
                let x = src.embed(p);
                let y = [x[0] * x[2] + x[1] * x[3], x[1] * x[2] - x[0] * x[3], 0.5 * (x[0] * x[0] + x[1] * x[1] - x[2] * x[2] - x[3] * x[3])];
                tgt.from_ambient(&y)
            }),
            dilation: Arc::new(|_| 1.0),
            factor: Some(Arc::new(|_| 1.0)),
            fiber_curvature: Some(Arc::new(|_| vec![0.0; 3])),
        }
    }

    /// pi_N : M x_{f^2} N -> N, dilation 1/f. The fibers M x {z} are totally
    /// geodesic. No mu exists unless f is constant.
    pub fn warped_fiber_projection(wp: &WarpedProduct) -> Self {
        let (w1, w2) = (wp.clone(), wp.clone());
        let m = wp.dim();
        Self {
            name: format!("projection of {} onto the fiber", wp.describe()),
            source: Arc::new(wp.clone()),
            target: wp.fiber.clone(),
            map: Arc::new(move |p| w1.project_fiber(p)),
            dilation: Arc::new(move |p| 1.0 / w2.f(&w2.project_base(p)).0),
            factor: None,
            fiber_curvature: Some(Arc::new(move |_| vec![0.0; m])),
        }
    }

    /// pi_M : M x_{f^2} N -> M, a Riemannian submersion whose fibers have
    /// mean curvature -grad f / f.
    pub fn warped_base_projection(wp: &WarpedProduct) -> Self {
        let (w1, w2) = (wp.clone(), wp.clone());
        Self {
            name: format!("projection of {} onto the base", wp.describe()),
            source: Arc::new(wp.clone()),
            target: wp.base.clone(),
            map: Arc::new(move |p| w1.project_base(p)),
            dilation: Arc::new(|_| 1.0),
            factor: Some(Arc::new(|_| 1.0)),
            fiber_curvature: Some(Arc::new(move |p| super::warped_fiber_mean_curvature(&w2, p))),
        }
    }

    pub fn with_dilation(mut self, name: &str, dilation: PointScalar) -> Self {
        self.name = format!("{} [{name}]", self.name);
        self.dilation = dilation;
        self.factor = None;
        self
    }

    /// Max |mu(pi(x)) - lambda(x)^2| over samples.
    pub fn factor_defect(&self, samples: &[Point]) -> Result<f64> {
        let mu = self.factor.as_ref().ok_or(Error::MissingEvaluator("mu with mu o pi = lambda^2"))?;
        Ok(samples.iter().map(|p| (mu(&(self.map)(p)) - (self.dilation)(p).powi(2)).abs()).fold(0.0, f64::max))
    }

    fn image_in_chart(&self, p: &Point, chart: usize) -> Result<Vec<f64>> {
        Ok(to_chart(self.target.as_ref(), &(self.map)(p), chart)?.x)
    }

    /// Differential of pi in charts (n x m), fourth-order differences.
    pub fn differential(&self, p: &Point, h: f64) -> Result<(usize, DMatrix<f64>)> {
        let y = (self.map)(p);
        let (m, n) = (self.source.dim(), self.target.dim());
        let mut d = DMatrix::zeros(n, m);
        for j in 0..m {
            let at = |s: f64| -> Result<Vec<f64>> {
                let mut x = p.x.clone();
                x[j] += s * h;
                self.image_in_chart(&Point::new(p.chart, x), y.chart)
            };
            let (a1, b1, a2, b2) = (at(1.0)?, at(-1.0)?, at(2.0)?, at(-2.0)?);
            for i in 0..n {
                d[(i, j)] = (8.0 * (a1[i] - b1[i]) - (a2[i] - b2[i])) / (12.0 * h);
            }
        }
        Ok((y.chart, d))
    }
}

fn check_chart(m: &dyn Manifold, p: &Point) -> Result<()> {
    if p.chart >= m.chart_count() || p.x.iter().any(|v| !v.is_finite()) || p.x.iter().map(|v| v * v).sum::<f64>() > 1e8 {
        return Err(Error::OutsideAtlas(p.x.clone()));
    }
    Ok(())
}

/// Max over samples and fields of |lap(u o pi) - lambda^2 (lap u) o pi|, both
/// Laplacians by fourth-order differences in charts.
pub fn morphism_commutation_check(s: &Submersion, fields: &[PointScalar], samples: &[Point], h: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in samples {
        check_chart(s.source.as_ref(), p)?;
        let y = (s.map)(p);
        check_chart(s.target.as_ref(), &y)?;
        let lam2 = (s.dilation)(p).powi(2);
        for u in fields {
            let up = |x: &[f64]| u(&(s.map)(&Point::new(p.chart, x.to_vec())));
            let ut = |x: &[f64]| u(&Point::new(y.chart, x.to_vec()));
            let lhs = laplacian_fd(s.source.as_ref(), p.chart, &p.x, &up, h);
            let rhs = lam2 * laplacian_fd(s.target.as_ref(), y.chart, &y.x, &ut, h);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct HmReport {
    /// Sup of |(n-2) H(grad ln lambda) + (m-n) kappa| in the source metric.
    pub equation: f64,
    /// Sup of the entries of h^{1/2} (d pi g^{-1} d pi^T) h^{1/2} - lambda^2 I:
    /// failure of horizontal conformality with the given dilation.
    pub conformality: f64,
    pub residual: f64,
}

/// The dilation equation at the samples, with H the g-orthogonal projection
/// onto ker(d pi)^perp.
pub fn hm_condition_check(s: &Submersion, samples: &[Point], h: f64) -> Result<HmReport> {
    let kappa = s.fiber_curvature.as_ref().ok_or(Error::MissingEvaluator("fiber mean curvature"))?;
    let (m, n) = (s.source.dim(), s.target.dim());
    let (mut eq, mut conf) = (0.0f64, 0.0f64);
    for p in samples {
        check_chart(s.source.as_ref(), p)?;
        let g = s.source.metric(p.chart, &p.x);
        let gi = g.clone().try_inverse().expect("metric is positive definite");
        let (yc, d) = s.differential(p, h)?;
        let gram = &d * &gi * d.transpose();
        let proj = &gi * d.transpose() * gram.clone().try_inverse().ok_or(Error::SingularGram(f64::INFINITY))? * &d;
        let lnl = |x: &[f64]| (s.dilation)(&Point::new(p.chart, x.to_vec())).ln();
        let grad = DVector::from_vec(gradient_fd(s.source.as_ref(), p.chart, &p.x, &lnl, h));
        let k = DVector::from_vec(kappa(p));
        let r = &proj * grad * (n as f64 - 2.0) + k * (m as f64 - n as f64);
        eq = eq.max((r.transpose() * &g * &r)[(0, 0)].sqrt());
        let y = to_chart(s.target.as_ref(), &(s.map)(p), yc)?;
        let hs = crate::numerics::spd_sqrt(&s.target.metric(yc, &y.x));
        let lam2 = (s.dilation)(p).powi(2);
        let c = &hs * gram * &hs - DMatrix::identity(n, n) * lam2;
        conf = conf.max(c.amax());
    }
    Ok(HmReport { equation: eq, conformality: conf, residual: eq.max(conf) })
}

/// Mean curvature vector of the coordinate slices spanned by `fiber_axes`,
/// (1/k) sum_{ab} q^{ab} H(Gamma_{ab}), for charts in which those slices are
/// the fibers and the remaining axes are g-orthogonal to them.
pub fn coordinate_fiber_mean_curvature(m: &dyn Manifold, p: &Point, fiber_axes: &[usize]) -> Vec<f64> {
    let dim = m.dim();
    let g = m.metric(p.chart, &p.x);
    let gam = christoffels(m, p.chart, &p.x);
    let k = fiber_axes.len();
    let q = DMatrix::from_fn(k, k, |a, b| g[(fiber_axes[a], fiber_axes[b])]).try_inverse().expect("fiber metric is positive definite");
    let mut out = vec![0.0; dim];
    for (i, o) in out.iter_mut().enumerate() {
        if fiber_axes.contains(&i) {
            continue;
        }
        for a in 0..k {
            for b in 0..k {
                *o += q[(a, b)] * gam[i][fiber_axes[a]][fiber_axes[b]];
            }
        }
        *o /= k as f64;
    }
    out
}
