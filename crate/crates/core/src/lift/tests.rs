use super::*;
use crate::manifold::{normalize, FlatTorus, GeneratingCurve, Manifold, Point, RoundSphere, WarpFn, WarpedProduct};
use crate::numerics::loglog_slope;
use rand::{Rng, SeedableRng};
use std::f64::consts::TAU;
use std::sync::Arc;

fn circle() -> Arc<dyn Manifold> {
    Arc::new(FlatTorus::new(vec![TAU]).unwrap())
}

/// T^2 x_{f^2} S^1 with f = 2 + sin(x1) cos(x2).
fn torus_warp() -> WarpedProduct {
    let base: Arc<dyn Manifold> = Arc::new(FlatTorus::new(vec![TAU, TAU]).unwrap());
    let warp: WarpFn = Arc::new(|_, x| {
        let (s1, c1) = x[0].sin_cos();
        let (s2, c2) = x[1].sin_cos();
        (2.0 + s1 * c2, vec![c1 * c2, -s1 * s2])
    });
    WarpedProduct::new(base, circle(), warp, (1.0, 3.0)).unwrap()
}

fn torus_of_revolution() -> WarpedProduct {
    crate::manifold::build_surface_of_revolution(GeneratingCurve::circle(2.0, 1.0), 1).unwrap()
}

fn random_points(m: &dyn Manifold, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x: Vec<f64> = m.periods(0).iter().map(|t| match t { Some(t) => rng.random_range(0.0..*t), None => rng.random_range(-0.9..0.9) }).collect();
            let mut p = Point::new(0, x);
            normalize(m, &mut p, None);
            p
        })
        .collect()
}

#[test]
fn warped_identity_orders() {
    let wp = torus_warp();
    let pts = random_points(wp.base.as_ref(), 20, 1);
    let u = |x: &[f64]| (x[0] + 2.0 * x[1]).sin() + 0.5 * (3.0 * x[0]).cos() * x[1].sin();
    let d1 = warped_identity_check(&wp, &u, &pts, 0.02);
    let d2 = warped_identity_check(&wp, &u, &pts, 0.01);
    assert!(d1 < 5e-2 && d2 < d1, "{d1} {d2}");
    let order = (d1 / d2).log2();
    assert!(order >= 1.9, "{order}");
    assert!(warped_identity_check(&wp, &|_| 2.5, &pts, 0.01) < 1e-12);
    // constant f: both sides are f^k lap u
    let flat = WarpedProduct::new(wp.base.clone(), circle(), Arc::new(|_, _| (1.7, vec![0.0, 0.0])), (1.7, 1.7)).unwrap();
    let (e1, e2) = (warped_identity_check(&flat, &u, &pts, 0.02), warped_identity_check(&flat, &u, &pts, 0.01));
    assert!(e2 < 1e-2 && (e1 / e2).log2() >= 1.9, "{e1} {e2}");
}

fn sphere_fields(target: &RoundSphere, count: usize, seed: u64) -> Vec<PointScalar> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let d = target.n + 1;
    (0..count)
        .map(|_| {
            let s = target.clone();
            let lin: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let quad: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let f: PointScalar = Arc::new(move |p: &Point| {
                let y = s.embed(p);
                let mut v: f64 = y.iter().zip(&lin).map(|(a, b)| a * b).sum();
                for i in 0..d {
                    for j in 0..d {
                        v += quad[i * d + j] * y[i] * y[j];
                    }
                }
                v + y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().sin()
            });
            f
        })
        .collect()
}

#[test]
fn hopf_map_commutes_with_laplacians() {
    let hopf = Submersion::hopf();
    let pts = random_points(hopf.source.as_ref(), 20, 2);
    // image lies on S^2(1/2)
    let s2 = RoundSphere::new(2, 0.5).unwrap();
    for p in &pts {
        let y = s2.embed(&(hopf.map)(p));
        assert!((y.iter().map(|v| v * v).sum::<f64>() - 0.25).abs() < 1e-13);
    }
    let fields = sphere_fields(&s2, 5, 3);
    let hs = [0.01, 0.005, 0.0025];
    let devs: Vec<f64> = hs.iter().map(|&h| morphism_commutation_check(&hopf, &fields, &pts, h).unwrap()).collect();
    assert!(devs[2] < 1e-6, "{devs:?}");
    assert!(loglog_slope(&hs, &devs) >= 3.5, "{devs:?}");
    assert_eq!(hopf.factor_defect(&pts).unwrap(), 0.0);
}

#[test]
fn identity_and_warped_projection_commute() {
    let s2: Arc<dyn Manifold> = Arc::new(RoundSphere::new(2, 1.0).unwrap());
    let id = Submersion::identity(s2.clone());
    let pts = random_points(s2.as_ref(), 10, 4);
    let fields = sphere_fields(&RoundSphere::new(2, 1.0).unwrap(), 3, 5);
    assert!(morphism_commutation_check(&id, &fields, &pts, 0.01).unwrap() < 1e-12);
    let wp = torus_of_revolution();
    let pin = Submersion::warped_fiber_projection(&wp);
    let pts = random_points(&wp, 20, 6);
    let fields: Vec<PointScalar> = vec![
        Arc::new(|p: &Point| p.x[0].sin() + 0.3 * (2.0 * p.x[0]).cos()),
        Arc::new(|p: &Point| (p.x[0].cos() + 0.5).exp()),
    ];
    let d1 = morphism_commutation_check(&pin, &fields, &pts, 0.02).unwrap();
    let d2 = morphism_commutation_check(&pin, &fields, &pts, 0.01).unwrap();
    // both sides reduce to the same fiber stencil scaled by 1/f^2
    assert!(d1 < 1e-10 && d2 < 1e-10, "{d1} {d2}");
    assert!(matches!(pin.factor_defect(&pts), Err(crate::Error::MissingEvaluator(_))));
}

#[test]
fn dilation_condition() {
    let hopf = Submersion::hopf();
    let pts = random_points(hopf.source.as_ref(), 10, 7);
    let r = hm_condition_check(&hopf, &pts, 1e-3).unwrap();
    assert_eq!(r.equation, 0.0);
    assert!(r.conformality < 1e-8, "{r:?}");
    let wp = torus_of_revolution();
    let pts = random_points(&wp, 30, 8);
    let pin = Submersion::warped_fiber_projection(&wp);
    let r = hm_condition_check(&pin, &pts, 1e-3).unwrap();
    assert!(r.residual <= 1e-6, "{r:?}");
    let w = wp.clone();
    let wrong = pin.with_dilation("1/f^2", Arc::new(move |p| w.f(&w.project_base(p)).0.powi(-2)));
    assert!(hm_condition_check(&wrong, &pts, 1e-3).unwrap().residual >= 0.1);
    // pi_M is a Riemannian submersion whose fibers are not minimal
    let pim = Submersion::warped_base_projection(&wp);
    let r = hm_condition_check(&pim, &pts, 1e-3).unwrap();
    assert!(r.conformality < 1e-8 && r.equation > 0.1, "{r:?}");
    let mut none = pim.clone();
    none.fiber_curvature = None;
    assert!(matches!(hm_condition_check(&none, &pts, 1e-3), Err(crate::Error::MissingEvaluator(_))));
}

#[test]
fn fiber_mean_curvature_matches_christoffel_oracle() {
    let wp = torus_warp();
    for p in random_points(&wp, 10, 9) {
        let closed = warped_fiber_mean_curvature(&wp, &p);
        let oracle = coordinate_fiber_mean_curvature(&wp, &p, &[2]);
        for (a, b) in closed.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-7, "{closed:?} {oracle:?}");
        }
    }
}

#[test]
fn revolution_scenarios() {
    let s = revolution_scenario(GeneratingCurve::circle(2.0, 1.0), 1, 4.0, true).unwrap();
    assert_eq!(s.n, 2);
    assert!(!s.degenerate);
    assert_eq!(s.fibers.len(), 2);
    let max = s.fibers.iter().find(|f| f.kind == "max").unwrap();
    let min = s.fibers.iter().find(|f| f.kind == "min").unwrap();
    assert!(max.t.min(TAU - max.t) < 1e-6 && (max.radius - 3.0).abs() < 1e-9);
    assert!((min.t - std::f64::consts::PI).abs() < 1e-6 && (min.radius - 1.0).abs() < 1e-9);
    // a = b = c = f^k makes Gamma = f^k
    for &(t, g) in s.gamma_samples.iter().step_by(37) {
        assert!((g - (2.0 + t.cos())).abs() < 1e-12);
    }
    assert_eq!(s.total.dim(), 3);
    let cyl = revolution_scenario(GeneratingCurve::cylinder(1.5, 4.0), 2, 4.0, false).unwrap();
    assert!(cyl.degenerate && cyl.fibers.is_empty());
    let e = exponent_status(2, 3, 5.0);
    assert!(e.subcritical_base && e.supercritical_total && (e.critical_total - 10.0 / 3.0).abs() < 1e-14);
    assert!(revolution_scenario(GeneratingCurve::circle(2.0, 1.0), 1, 2.0, false).is_err());
}

#[test]
fn constant_solution_lifts_exactly() {
    let s = revolution_scenario(GeneratingCurve::cylinder(1.5, 4.0), 1, 4.0, false).unwrap();
    let prof = Arc::new(crate::ground_state::solve_ground_state(1, 4.0, 1e-9).unwrap());
    let pr = s.problem(prof).unwrap();
    let sp = crate::fullsolve::assemble(&pr, 0.3).unwrap();
    let one = sp.field(vec![1.0; sp.len()]);
    let mut rng = rand::rngs::StdRng::seed_from_u64(10);
    let r = lift_warped(&sp, &one, &s.total, 1e-10, 200, &mut rng).unwrap();
    assert!(r.source_nodal_residual < 1e-13 && r.lifted_residual < 1e-9 && r.fiber_derivative == 0.0, "{r:?}");
    let off = sp.field(vec![0.9; sp.len()]);
    assert!(matches!(lift_warped(&sp, &off, &s.total, 1e-10, 10, &mut rng), Err(crate::Error::SourceNotASolution { .. })));
    let v = lift_field(&one, &s.total, 8).unwrap();
    assert_eq!(v.values.len(), sp.len() * 8);
    assert_eq!(v.grid.shape, vec![sp.grid.shape[0], 8]);
}
