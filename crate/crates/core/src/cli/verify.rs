//! The invariant suite run by `lsred verify`.

use crate::ansatz::{PeakAnsatz, Problem};
use crate::coeffs::{gamma_gradient, gamma_with_exponents, CoeffValues, CoefficientField, GammaExponents};
use crate::error::Result;
use crate::fullsolve::{assemble, corrected_ansatz, newton_solve, NewtonOptions};
use crate::ground_state::{rescale_profile, solve_ground_state, GroundStateProfile};
use crate::lift::{hm_condition_check, lift_warped, morphism_commutation_check, random_product_point, revolution_scenario, warped_identity_check, PointScalar, Submersion};
use crate::manifold::{exp_map, log_map, normal_expansion_check, normalize, FlatTorus, GeneratingCurve, Manifold, Point, RoundSphere, WarpFn, WarpedProduct};
use crate::numerics::integrate_gl;
use crate::reduction::{fixed_point_phi, ReductionOptions};
use rand::{Rng, SeedableRng};
use serde::Serialize;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Fault {
    /// Perturb the exponent of a in Gamma by +1/2.
    GammaExponent,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyOptions {
    pub fault: Option<Fault>,
    pub halve_mesh: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

struct Suite {
    opts: VerifyOptions,
    p1: Arc<GroundStateProfile>,
    p2: Arc<GroundStateProfile>,
}

impl Suite {
    fn exponents(&self, n: usize, p: f64) -> GammaExponents {
        let mut e = GammaExponents::new(n, p);
        if self.opts.fault == Some(Fault::GammaExponent) {
            e.a += 0.5;
        }
        e
    }

    fn gamma(&self, v: CoeffValues, n: usize, p: f64) -> f64 {
        gamma_with_exponents(v, self.exponents(n, p))
    }

    fn npe(&self) -> f64 {
        if self.opts.halve_mesh {
            12.0
        } else {
            6.0
        }
    }

    fn torus_problem(&self, a: &str) -> Result<Problem> {
        let t: Arc<dyn Manifold> = Arc::new(FlatTorus::new(vec![TAU, TAU])?);
        let mut pr = Problem::new(t, CoefficientField::from_expressions(a, "1", "1", 2)?, self.p2.clone(), 2.5)?;
        pr.nodes_per_eps = self.npe();
        Ok(pr)
    }

    fn rng(&self) -> rand::rngs::StdRng {
        rand::rngs::StdRng::seed_from_u64(self.opts.seed)
    }
}

type CheckFn = fn(&Suite) -> Result<(bool, String)>;

fn closed_forms(s: &Suite) -> Result<(bool, String)> {
    let u0 = s.p1.peak();
    let m4 = s.p1.moment(4.0)?;
    let cp = s.p1.energy_constant();
    let p3 = solve_ground_state(1, 3.0, 1e-10)?.peak();
    let errs = [(u0 - 2f64.sqrt()).abs(), (m4 - 16.0 / 3.0).abs(), (cp - 4.0 / 3.0).abs(), (p3 - 1.5).abs()];
    Ok((errs.iter().all(|e| *e <= 1e-6), format!("errors {:.1e}", errs.iter().cloned().fold(0.0, f64::max))))
}

fn profile_shape(s: &Suite) -> Result<(bool, String)> {
    let pr = &s.p2;
    let mut ok = pr.residual_bound <= 1e-6;
    let mut prev = pr.peak();
    let mut r = 0.05;
    while r < 15.0 {
        let v = pr.value(r);
        ok &= v > 0.0 && v < prev;
        prev = v;
        r += 0.05;
    }
    Ok((ok, format!("ODE residual bound {:.1e}", pr.residual_bound)))
}

fn energy_constant_times_gamma(s: &Suite) -> Result<(bool, String)> {
    let g = &s.p2;
    let mut worst: f64 = 0.0;
    for (a, b, c) in [(2.0, 3.0, 0.5), (0.7, 2.2, 1.9), (1.5, 0.8, 1.2)] {
        let coeffs = CoefficientField::constant(a, b, c);
        let v = rescale_profile(g.clone(), &coeffs, &[0.0, 0.0])?;
        let radial = |h: &dyn Fn(f64) -> f64| integrate_gl(|r| 2.0 * PI * r * h(r), 0.0, v.support_radius(), 400, 8);
        let grad2 = radial(&|r| v.gradient(&[r, 0.0])[0].powi(2));
        let l2 = radial(&|r| v.value(&[r, 0.0]).powi(2));
        let l4 = radial(&|r| v.value(&[r, 0.0]).powi(4));
        let direct = 0.5 * (c * grad2 + a * l2) - b * l4 / 4.0;
        let predicted = g.energy_constant() * s.gamma(coeffs.at(&[0.0, 0.0]), 2, 4.0);
        worst = worst.max((direct / predicted - 1.0).abs());
    }
    Ok((worst <= 1e-6, format!("max relative deviation {worst:.1e}")))
}

fn rescaled_residual(s: &Suite) -> Result<(bool, String)> {
    let mut rng = s.rng();
    let coeffs = CoefficientField::constant(1.7, 0.6, 0.9);
    let v = rescale_profile(s.p2.clone(), &coeffs, &[0.0, 0.0])?;
    let worst = (0..50)
        .map(|_| v.residual(&[rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)]).abs())
        .fold(0.0, f64::max);
    Ok((worst <= 1e-6, format!("max residual {worst:.1e}")))
}

fn normal_expansions(_: &Suite) -> Result<(bool, String)> {
    let s2 = RoundSphere::new(2, 1.0)?;
    let r = normal_expansion_check(&s2, &s2.from_ambient(&[0.6, 0.0, 0.8]), &[1.0, 0.0])?;
    let t = FlatTorus::new(vec![TAU, TAU])?;
    let f = normal_expansion_check(&t, &Point::new(0, vec![1.0, 2.0]), &[0.6, 0.8])?;
    let ok = r.linear_max < 1e-6
        && (r.quadratic_g[3] + 1.0 / 3.0).abs() < 0.02 / 3.0
        && r.order.is_some_and(|o| o >= 1.9)
        && f.linear_max < 1e-6;
    Ok((ok, format!("sphere curvature coefficient {:.5}, linear {:.1e}", r.quadratic_g[3], r.linear_max)))
}

fn exp_log_inverse(s: &Suite) -> Result<(bool, String)> {
    let s2 = RoundSphere::new(2, 1.0)?;
    let mut rng = s.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut p = Point::new(0, vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        normalize(&s2, &mut p, None);
        let v = [rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8)];
        let back = log_map(&s2, &p, &exp_map(&s2, &p, &v)?)?;
        worst = worst.max(v.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    Ok((worst < 1e-8, format!("max |log(exp v) - v| {worst:.1e}")))
}

fn operator(s: &Suite) -> Result<(bool, String)> {
    let sp = assemble(&s.torus_problem("1 + 0.5*cos(x1)")?, 0.3)?;
    let ones = sp.apply_a(&vec![1.0; sp.len()]);
    let c = ones.iter().zip(&sp.a).map(|(x, a)| (x - a).abs()).fold(0.0, f64::max);
    let mut rng = s.rng();
    let u: Vec<f64> = (0..sp.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..sp.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let sym = (sp.inner(&u, &v) - sp.inner(&v, &u)).abs() / (sp.norm(&u) * sp.norm(&v));
    Ok((c < 1e-12 && sym < 1e-10, format!("constants {c:.1e}, symmetry {sym:.1e}")))
}

fn ansatz_and_gram(s: &Suite) -> Result<(bool, String)> {
    let sp = assemble(&s.torus_problem("1 + 0.5*cos(x1)")?, 0.1)?;
    let xi = Point::new(0, vec![1.0, 2.0]);
    let a = PeakAnsatz::new(&sp, &xi)?;
    let node = sp.grid.node(sp.field(a.w.clone()).argmax().0);
    let within = (0..2).all(|d| (node[d] - xi.x[d]).abs() <= sp.grid.spacing(d));
    let ratio = (a.gram[(0, 1)] / a.gram[(0, 0)].min(a.gram[(1, 1)])).abs();
    Ok((within && ratio <= 0.05, format!("Gram off-diagonal ratio {ratio:.1e}")))
}

fn reduction_fixed_point(s: &Suite) -> Result<(bool, String)> {
    let pr = s.torus_problem("1 + 0.5*cos(x1)")?;
    let sp = assemble(&pr, 0.15)?;
    let xi = [1.0, 2.0];
    let st = fixed_point_phi(&sp, &Point::new(0, xi.to_vec()), &ReductionOptions::default())?;
    let predicted = s.p2.energy_constant() * s.gamma(pr.coeffs.at(&xi), 2, 4.0);
    let rel = (st.energy / predicted - 1.0).abs();
    let ok = st.max_contraction < 0.95 && st.orthogonality_defect < 1e-8 && rel <= 0.02;
    Ok((ok, format!("contraction {:.3}, |J - C_p Gamma| / C_p Gamma = {rel:.1e}", st.max_contraction)))
}

fn gamma_critical_points(s: &Suite) -> Result<(bool, String)> {
    let coeffs = CoefficientField::from_expressions("1 + 0.5*cos(x1)", "1", "1", 2)?;
    let mut worst: f64 = 0.0;
    for x in [[0.0, 1.0], [PI, 2.0], [0.7, 0.3], [2.2, 4.0]] {
        let g = gamma_gradient(&coeffs, &x, 2, 4.0);
        let h = 1e-5;
        for d in 0..2 {
            let (mut a, mut b) = (x, x);
            a[d] += h;
            b[d] -= h;
            let fd = (s.gamma(coeffs.at(&a), 2, 4.0) - s.gamma(coeffs.at(&b), 2, 4.0)) / (2.0 * h);
            worst = worst.max((fd - g[d]).abs());
        }
    }
    let crit = [0.0, PI].iter().all(|&t| gamma_gradient(&coeffs, &[t, 1.0], 2, 4.0).iter().all(|v| v.abs() < 1e-12));
    Ok((crit && worst < 1e-8, format!("gradient mismatch {worst:.1e}")))
}

fn newton_concentration(s: &Suite) -> Result<(bool, String)> {
    let pr = s.torus_problem("1 + 0.5*cos(x1)")?;
    let sp = assemble(&pr, 0.2)?;
    let xi = Point::new(0, vec![0.0, PI]);
    let seed = corrected_ansatz(&sp, &xi, &ReductionOptions::default())?;
    let opts = NewtonOptions::default();
    let (u, rep) = newton_solve(&sp, &seed, Some(xi.x.clone()), &opts)?;
    let x1 = rep.peak.position[0].rem_euclid(TAU);
    let dist = x1.min(TAU - x1).hypot(rep.peak.position[1] - PI);
    let (_, again) = newton_solve(&sp, &u.values, None, &opts)?;
    let ok = rep.iterations <= 8 && rep.positive && rep.max_principle_ok && dist <= sp.eps && again.iterations <= 1;
    Ok((ok, format!("{} iterations, residual {:.1e}, peak offset {dist:.1e}", rep.iterations, rep.residual)))
}

fn collapse_control(s: &Suite) -> Result<(bool, String)> {
    let sp = assemble(&s.torus_problem("1")?, 0.3)?;
    let r = newton_solve(&sp, &vec![0.0; sp.len()], None, &NewtonOptions::default());
    Ok((matches!(r, Err(crate::Error::CollapseToZero(_))), "zero seed".into()))
}

fn warped_identity(_: &Suite) -> Result<(bool, String)> {
    let base: Arc<dyn Manifold> = Arc::new(FlatTorus::new(vec![TAU, TAU])?);
    let warp: WarpFn = Arc::new(|_, x| {
        let (s1, c1) = x[0].sin_cos();
        let (s2, c2) = x[1].sin_cos();
        (2.0 + s1 * c2, vec![c1 * c2, -s1 * s2])
    });
    let wp = WarpedProduct::new(base, WarpedProduct::round_fiber(1)?, warp, (1.0, 3.0))?;
    let pts: Vec<Point> = (0..10).map(|j| Point::new(0, vec![0.6 * j as f64, 0.37 * j as f64 + 0.1])).collect();
    let u = |x: &[f64]| (x[0] + 2.0 * x[1]).sin() + 0.5 * (3.0 * x[0]).cos() * x[1].sin();
    let d1 = warped_identity_check(&wp, &u, &pts, 0.02);
    let d2 = warped_identity_check(&wp, &u, &pts, 0.01);
    let order = (d1 / d2).log2();
    Ok((order >= 1.9, format!("Richardson order {order:.2}")))
}

fn hopf_commutation(s: &Suite) -> Result<(bool, String)> {
    let hopf = Submersion::hopf();
    let s2 = RoundSphere::new(2, 0.5)?;
    let mut rng = s.rng();
    let pts: Vec<Point> = (0..10)
        .map(|_| {
            let mut p = Point::new(0, (0..3).map(|_| rng.random_range(-1.0..1.0)).collect());
            normalize(hopf.source.as_ref(), &mut p, None);
            p
        })
        .collect();
    let fields: Vec<PointScalar> = (0..5)
        .map(|_| {
            let w: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let sp = s2.clone();
            let f: PointScalar = Arc::new(move |p: &Point| {
                let y = sp.embed(p);
                (y[0] * w[0] + y[1] * w[1]).sin() + y[2] * w[2] * y[0]
            });
            f
        })
        .collect();
    let d1 = morphism_commutation_check(&hopf, &fields, &pts, 0.01)?;
    let d2 = morphism_commutation_check(&hopf, &fields, &pts, 0.005)?;
    let order = (d1 / d2).log2();
    Ok((order >= 3.5 && d2 < 1e-6, format!("deviation {d2:.1e}, order {order:.2}")))
}

fn dilation_condition(s: &Suite) -> Result<(bool, String)> {
    let hopf = Submersion::hopf();
    let pts = [Point::new(0, vec![0.3, -0.2, 0.5]), Point::new(1, vec![0.1, 0.7, -0.4])];
    let geodesic = hm_condition_check(&hopf, &pts, 1e-3)?;
    let wp = crate::manifold::build_surface_of_revolution(GeneratingCurve::circle(2.0, 1.0), 1)?;
    let mut rng = s.rng();
    let pts: Vec<Point> = (0..24).map(|_| random_product_point(&wp, &mut rng)).collect();
    let pin = Submersion::warped_fiber_projection(&wp);
    let warped = hm_condition_check(&pin, &pts, 1e-3)?;
    let w = wp.clone();
    let wrong = pin.with_dilation("1/f^2", Arc::new(move |p| w.f(&w.project_base(p)).0.powi(-2)));
    let control = hm_condition_check(&wrong, &pts, 1e-3)?;
    let ok = geodesic.equation == 0.0 && warped.residual <= 1e-6 && control.residual >= 0.1;
    Ok((ok, format!("geodesic {:.1e}, warped {:.1e}, wrong dilation {:.2}", geodesic.residual, warped.residual, control.residual)))
}

fn revolution_lift(s: &Suite) -> Result<(bool, String)> {
    let sc = revolution_scenario(GeneratingCurve::circle(2.0, 1.0), 1, 4.0, false)?;
    let mut pr = sc.problem(s.p1.clone())?;
    pr.nodes_per_eps = s.npe();
    let sp = assemble(&pr, 0.1)?;
    let xi = Point::new(0, vec![0.0]);
    let seed = corrected_ansatz(&sp, &xi, &ReductionOptions::default())?;
    let (u, _) = newton_solve(&sp, &seed, None, &NewtonOptions::default())?;
    let mut rng = s.rng();
    let r = lift_warped(&sp, &u, &sc.total, 1e-7, 300, &mut rng)?;
    let crit = sc.fibers.len() == 2;
    Ok((crit && r.lifted_residual <= 3.0 * r.source_residual, format!("lifted / source residual {:.3}", r.ratio)))
}

const CHECKS: &[(&str, &str, CheckFn)] = &[
    ("ground_state", "closed forms for n = 1", closed_forms),
    ("ground_state", "positive decreasing profile", profile_shape),
    ("ground_state", "energy of rescaled profile equals C_p Gamma", energy_constant_times_gamma),
    ("ground_state", "rescaled profile residual", rescaled_residual),
    ("manifold", "normal-coordinate expansions", normal_expansions),
    ("manifold", "log inverts exp on S^2", exp_log_inverse),
    ("fullsolve", "operator constants and symmetry", operator),
    ("ansatz", "peak location and Gram asymptotics", ansatz_and_gram),
    ("reduction", "contraction and reduced energy", reduction_fixed_point),
    ("reduction", "Gamma gradient and critical set", gamma_critical_points),
    ("fullsolve", "Newton from the corrected ansatz", newton_concentration),
    ("fullsolve", "zero seed collapses", collapse_control),
    ("lift", "warped identity order", warped_identity),
    ("lift", "Hopf map commutes with Laplacians", hopf_commutation),
    ("lift", "dilation condition and negative control", dilation_condition),
    ("lift", "torus-of-revolution lift", revolution_lift),
];

/// Runs every check; errors count as failures.
pub fn run_suite(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let suite = Suite {
        opts: opts.clone(),
        p1: Arc::new(solve_ground_state(1, 4.0, 1e-10)?),
        p2: Arc::new(solve_ground_state(2, 4.0, 1e-10)?),
    };
    Ok(CHECKS
        .iter()
        .map(|(module, name, f)| {
            let (passed, detail) = match f(&suite) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome { module, name, passed, detail }
        })
        .collect())
}
