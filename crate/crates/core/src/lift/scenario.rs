use crate::coeffs::{gamma_functional, CoefficientField, FnField, ScalarField};
use crate::error::{check_exponent, critical_exponent, Result};
use crate::manifold::{build_surface_of_revolution, CurveManifold, FlatTorus, GeneratingCurve, Manifold, WarpFn, WarpedProduct};
use crate::ansatz::{EpsSpace, Problem};
use crate::fullsolve::{assemble, corrected_ansatz, newton_solve, NewtonOptions, SolveReport};
use crate::grid::DiscreteField;
use crate::ground_state::GroundStateProfile;
use crate::manifold::Point;
use crate::reduction::ReductionOptions;
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, Clone, Serialize)]
pub struct PredictedFiber {
    /// Curve parameter of the critical point of Gamma.
    pub t: f64,
    pub kind: &'static str,
    pub gamma: f64,
    /// Radius f(t) of the concentration sphere.
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentStatus {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub critical_base: f64,
    pub critical_total: f64,
    pub subcritical_base: bool,
    /// p >= 2*_{n+k}: the lifted problem is critical or supercritical.
    pub supercritical_total: bool,
}

pub fn exponent_status(n: usize, k: usize, p: f64) -> ExponentStatus {
    let (cb, ct) = (critical_exponent(n), critical_exponent(n + k));
    ExponentStatus {
        n,
        k,
        p,
        critical_base: cb,
        critical_total: ct,
        subcritical_base: p > 2.0 && p < cb,
        supercritical_total: p >= ct,
    }
}

/// Surface-of-revolution scenario: base problem with a = b = c = f^k on the
/// generating curve (times a circle when `extend` is set, giving n = 2),
/// the warped product it lifts to, and the Gamma landscape along the curve.
#[derive(Clone, Serialize)]
pub struct RevolutionScenario {
    pub curve: String,
    pub k: usize,
    pub p: f64,
    pub n: usize,
    #[serde(skip)]
    pub base: Arc<dyn Manifold>,
    #[serde(skip)]
    pub total: WarpedProduct,
    #[serde(skip)]
    pub coeffs: CoefficientField,
    pub base_descriptor: String,
    pub total_descriptor: String,
    /// (t, Gamma) along the curve.
    pub gamma_samples: Vec<(f64, f64)>,
    pub fibers: Vec<PredictedFiber>,
    pub degenerate: bool,
    pub exponents: ExponentStatus,
}

impl std::fmt::Debug for RevolutionScenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RevolutionScenario({}, k = {}, n = {})", self.curve, self.k, self.n)
    }
}

pub fn revolution_scenario(curve: GeneratingCurve, k: usize, p: f64, extend: bool) -> Result<RevolutionScenario> {
    let n = if extend { 2 } else { 1 };
    check_exponent(n, p)?;
    let revolution = build_surface_of_revolution(curve.clone(), k)?;
    let c1 = curve.clone();
    let warp: WarpFn = Arc::new(move |_, x| {
        let [r, dr, _] = c1.rho_derivatives(x[0]);
        let mut g = vec![0.0; n];
        g[0] = dr;
        (r, g)
    });
    let base: Arc<dyn Manifold> = if extend {
        let circle: Arc<dyn Manifold> = Arc::new(FlatTorus::new(vec![std::f64::consts::TAU])?);
        Arc::new(WarpedProduct::product(Arc::new(CurveManifold::new(curve.clone())), circle))
    } else {
        revolution.base.clone()
    };
    let total = WarpedProduct::new(base.clone(), revolution.fiber.clone(), warp, revolution.f_range)?;
    let (c2, c3) = (curve.clone(), curve.clone());
    let ki = k as i32;
    let fk: Arc<dyn ScalarField> = Arc::new(
        FnField::new(&format!("rho^{k}"), move |x| c2.rho(x[0]).powi(ki)).with_gradient(move |x| {
            let [r, dr, _] = c3.rho_derivatives(x[0]);
            let mut g = vec![0.0; n];
            g[0] = k as f64 * r.powi(ki - 1) * dr;
            g
        }),
    );
    let coeffs = CoefficientField::new(fk.clone(), fk.clone(), fk);
    let m = 720;
    let gamma_samples: Vec<(f64, f64)> = (0..m)
        .map(|j| {
            let t = curve.period * j as f64 / m as f64;
            let mut x = vec![0.0; n];
            x[0] = t;
            (t, gamma_functional(coeffs.at(&x), n, p))
        })
        .collect();
    let (lo, hi) = gamma_samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.1), b.max(s.1)));
    let degenerate = hi - lo <= 1e-12 * hi.abs();
    let mut fibers = Vec::new();
    if !degenerate {
        for j in 0..m {
            let (g0, g1, g2) = (gamma_samples[(j + m - 1) % m].1, gamma_samples[j].1, gamma_samples[(j + 1) % m].1);
            let kind = if g1 > g0 && g1 >= g2 {
                "max"
            } else if g1 < g0 && g1 <= g2 {
                "min"
            } else {
                continue;
            };
            let h = curve.period / m as f64;
            let curv = g0 - 2.0 * g1 + g2;
            let off = if curv != 0.0 { 0.5 * (g0 - g2) / curv } else { 0.0 };
            let t = (gamma_samples[j].0 + off * h).rem_euclid(curve.period);
            let mut x = vec![0.0; n];
            x[0] = t;
            fibers.push(PredictedFiber { t, kind, gamma: gamma_functional(coeffs.at(&x), n, p), radius: curve.rho(t) });
        }
    }
    Ok(RevolutionScenario {
        curve: curve.name.clone(),
        k,
        p,
        n,
        base_descriptor: base.describe(),
        total_descriptor: total.describe(),
        base,
        total,
        coeffs,
        gamma_samples,
        fibers,
        degenerate,
        exponents: exponent_status(n, k, p),
    })
}

impl RevolutionScenario {
    /// The base problem with the ground state of dimension n.
    pub fn problem(&self, profile: Arc<GroundStateProfile>) -> Result<Problem> {
        let r = (0.8 * self.base.injectivity_radius()).min(2.5);
        Problem::new(self.base.clone(), self.coeffs.clone(), profile, r)
    }

    /// Newton solve of the base problem at eps seeded by the corrected ansatz
    /// at the curve parameter t (other base coordinates 0).
    pub fn solve_base(
        &self,
        profile: Arc<GroundStateProfile>,
        eps: f64,
        t: f64,
        reduction: &ReductionOptions,
        newton: &NewtonOptions,
    ) -> Result<(EpsSpace, DiscreteField, SolveReport)> {
        let pr = self.problem(profile)?;
        let sp = assemble(&pr, eps)?;
        let mut x = vec![0.0; self.n];
        x[0] = t;
        let xi = Point::new(0, x);
        let seed = corrected_ansatz(&sp, &xi, reduction)?;
        let (u, rep) = newton_solve(&sp, &seed, Some(xi.x.clone()), newton)?;
        Ok((sp, u, rep))
    }
}
