use super::*;
use rand::{Rng, SeedableRng};
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::Arc;

#[test]
fn torus_basics() {
    let t = FlatTorus::new(vec![TAU, TAU]).unwrap();
    assert!((t.volume() - TAU * TAU).abs() < 1e-12);
    assert!((t.integrate(&|_| 1.0).unwrap() - TAU * TAU).abs() < 1e-10);
    let gam = christoffels(&t, 0, &[0.3, 1.0]);
    assert!(gam.iter().flatten().flatten().all(|&g| g == 0.0));
    let q = exp_map(&t, &Point::new(0, vec![6.0, 0.5]), &[1.0, -1.0]).unwrap();
    assert!((q.x[0] - (7.0 - TAU)).abs() < 1e-14 && (q.x[1] - (TAU - 0.5)).abs() < 1e-14);
    // the generic integrator agrees with the closed form
    let (g, _) = geodesic(&t, &Point::new(0, vec![6.0, 0.5]), &[1.0, -1.0], 1.0).unwrap();
    assert!((g.x[0] - q.x[0]).abs() < 1e-12);
    assert!(FlatTorus::new(vec![1.0, -2.0]).is_err());
}

#[test]
fn sphere_volume_and_geodesics() {
    let s = RoundSphere::new(2, 1.0).unwrap();
    assert!((s.volume() - 4.0 * PI).abs() < 1e-6);
    assert!((s.integrate(&|_| 1.0).unwrap() - 4.0 * PI).abs() < 1e-6);
    let np = s.north_pole();
    let q = exp_map(&s, &np, &[FRAC_PI_2 / 2.0, 0.0]).unwrap();
    // velocity pi/2 in ambient length; chart velocity is halved by the conformal factor 4 at 0
    let y = s.embed(&q);
    assert!(y[2].abs() < 1e-8, "{y:?}");
    // equator closes after length 2 pi
    let start = s.from_ambient(&[1.0, 0.0, 0.0]);
    let g = metric_at(&s, &start);
    let v = [0.0, 1.0 / g[(1, 1)].sqrt()];
    let (end, w) = geodesic(&s, &start, &v, TAU).unwrap();
    let y = s.embed(&end);
    assert!((y[0] - 1.0).abs() < 1e-8 && y[1].abs() < 1e-8 && y[2].abs() < 1e-8, "{y:?}");
    assert!((norm_g(&s, &end, &w) - 1.0).abs() < 1e-9);
    assert!(RoundSphere::new(1, 1.0).is_err());
}

#[test]
fn polar_sphere_christoffels() {
    let p = CoordinatePatch::polar_sphere();
    let th: f64 = 0.7;
    let gam = christoffels(&p, 0, &[th, 0.3]);
    assert!((gam[0][1][1] + th.sin() * th.cos()).abs() < 1e-8);
    assert!((gam[1][0][1] - th.cos() / th.sin()).abs() < 1e-8);
    assert_eq!(gam[1][0][1], gam[1][1][0]);
    assert!(metric_compatibility(&p, 0, &[th, 0.3]) < 1e-7);
}

#[test]
fn sphere_transition_consistency() {
    let s = RoundSphere::new(3, 2.0).unwrap();
    let x = [0.4, -1.1, 0.9];
    let y = s.transition(0, 1, &x).unwrap();
    let back = s.transition(1, 0, &y).unwrap();
    for i in 0..3 {
        assert!((back[i] - x[i]).abs() < 1e-12);
    }
    let ea = s.embed(&Point::new(0, x.to_vec()));
    let eb = s.embed(&Point::new(1, y));
    for i in 0..4 {
        assert!((ea[i] - eb[i]).abs() < 1e-12);
    }
    assert!(metric_compatibility(&s, 0, &x) < 1e-7);
}

#[test]
fn log_inverts_exp_on_sphere() {
    let s = RoundSphere::new(2, 1.0).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    for _ in 0..20 {
        let p = s.from_ambient(&{
            let v: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            [v[0] / n, v[1] / n, v[2] / n]
        });
        let frame = orthonormal_frame(&s, &p);
        let len = rng.random_range(0.05..0.9 * s.injectivity_radius() * 0.9);
        let ang: f64 = rng.random_range(0.0..TAU);
        let v = &frame * nalgebra::DVector::from_column_slice(&[len * ang.cos(), len * ang.sin()]);
        let q = exp_map(&s, &p, v.as_slice()).unwrap();
        let w = log_map(&s, &p, &q).unwrap();
        for i in 0..2 {
            assert!((w[i] - v[i]).abs() < 1e-8 * (1.0 + v[i].abs()), "{w:?} vs {v:?}");
        }
        assert!((distance(&s, &p, &q).unwrap() - len).abs() < 1e-8);
    }
    let p = s.north_pole();
    assert!(log_map(&s, &p, &p).unwrap().iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn integrated_geodesics_match_great_circles() {
    let s = RoundSphere::new(2, 1.5).unwrap();
    let p = s.from_ambient(&[0.9, 0.0, 1.2]);
    let v = [0.3, -0.4];
    let closed = exp_map(&s, &p, &v).unwrap();
    let (integrated, _) = geodesic(&s, &p, &v, 1.0).unwrap();
    let (a, b) = (s.embed(&closed), s.embed(&integrated));
    for i in 0..3 {
        assert!((a[i] - b[i]).abs() < 1e-9);
    }
    // Newton shooting reproduces the closed-form logarithm
    let w = newton_log_map(&s, &p, &closed).unwrap();
    assert!((w[0] - v[0]).abs() < 1e-9 && (w[1] - v[1]).abs() < 1e-9, "{w:?}");
}

#[test]
fn normal_expansion_on_sphere_and_torus() {
    let s = RoundSphere::new(2, 1.0).unwrap();
    let rep = normal_expansion_check(&s, &s.from_ambient(&[0.6, 0.0, 0.8]), &[1.0, 0.0]).unwrap();
    assert!(rep.linear_max < 1e-6, "{rep:?}");
    assert!((rep.quadratic_g[3] + 1.0 / 3.0).abs() < 0.02 / 3.0, "{rep:?}");
    assert!((rep.quadratic_sqrt_det + 1.0 / 6.0).abs() < 1e-3);
    assert!(rep.order.unwrap() > 1.9);
    let t = FlatTorus::new(vec![TAU, TAU]).unwrap();
    let rep = normal_expansion_check(&t, &Point::new(0, vec![1.0, 2.0]), &[0.6, 0.8]).unwrap();
    assert!(rep.linear_max < 1e-6 && rep.order.is_none());
}

#[test]
fn expe_jacobian_orders() {
    let t = FlatTorus::new(vec![TAU, TAU]).unwrap();
    let r = expe_check(&t, &Point::new(0, vec![1.0, 1.0]), &[1.0, 0.0], &[0.2, 0.1, 0.05]).unwrap();
    assert!(r.deviation.iter().all(|&d| d < 1e-9), "{r:?}");
    let s = RoundSphere::new(2, 1.0).unwrap();
    let r = expe_check(&s, &s.from_ambient(&[0.0, 0.6, 0.8]), &[0.6, 0.8], &[0.2, 0.1, 0.05]).unwrap();
    assert!(r.order.unwrap() >= 1.9, "{r:?}");
}

#[test]
fn warped_product_volume_by_fubini() {
    let w = build_surface_of_revolution(GeneratingCurve::circle(2.0, 1.0), 1).unwrap();
    // torus of revolution: area 4 pi^2 R r
    assert!((w.volume() - 4.0 * PI * PI * 2.0).abs() < 1e-6);
    assert!((w.f_range.0 - 1.0).abs() < 1e-5 && (w.f_range.1 - 3.0).abs() < 1e-5);
    // independent quadrature of sqrt(det g) over the product chart
    let m = 200;
    let mut s = 0.0;
    for i in 0..m {
        let t = TAU * i as f64 / m as f64;
        let g = w.metric(0, &[t, 0.0]);
        s += g.determinant().sqrt() * TAU * TAU / m as f64;
    }
    assert!((s - w.volume()).abs() < 1e-6);
    // block structure
    let g = w.metric(0, &[0.4, 1.0]);
    assert_eq!(g[(0, 1)], 0.0);
    assert!((g[(1, 1)] - (2.0 + 0.4f64.cos()).powi(2)).abs() < 1e-14);
    assert!(matches!(
        build_surface_of_revolution(GeneratingCurve::circle(0.5, 1.0), 1),
        Err(crate::Error::CurveTouchesAxis(_))
    ));
}

#[test]
fn constant_radius_gives_product() {
    let w = build_surface_of_revolution(GeneratingCurve::cylinder(1.5, 3.0), 2).unwrap();
    let g = w.metric(0, &[0.2, 0.1, -0.3]);
    let h = w.fiber.metric(0, &[0.1, -0.3]);
    for i in 0..2 {
        for j in 0..2 {
            assert!((g[(1 + i, 1 + j)] - 2.25 * h[(i, j)]).abs() < 1e-14);
        }
    }
    let sphere_area = 4.0 * PI;
    assert!((w.volume() - 3.0 * 2.25 * sphere_area).abs() < 1e-4);
}

#[test]
fn curve_exp_log_by_arclength() {
    // ellipse-like curve with nonuniform speed
    let c = GeneratingCurve::analytic("ellipse", TAU, |t| {
        let (s, co) = t.sin_cos();
        [vec![2.0 * s, 3.0 + co], vec![2.0 * co, -s], vec![-2.0 * s, -co]]
    });
    let m = CurveManifold::new(c);
    let p = Point::new(0, vec![0.4]);
    for v in [0.3, -0.7, 1.1] {
        let q = exp_map(&m, &p, &[v]).unwrap();
        let (g, _) = geodesic(&m, &p, &[v], 1.0).unwrap();
        assert!((q.x[0] - g.x[0]).abs() < 1e-9, "{q:?} {g:?}");
        assert!((log_map(&m, &p, &q).unwrap()[0] - v).abs() < 1e-10);
    }
}

#[test]
fn sampled_curve_matches_circle() {
    let m = 400;
    let t: Vec<f64> = (0..m).map(|j| TAU * j as f64 / m as f64).collect();
    let pts: Vec<Vec<f64>> = t.iter().map(|&s| vec![s.sin(), 2.0 + s.cos()]).collect();
    let c = GeneratingCurve::sampled(&t, &pts).unwrap();
    assert!((c.period - TAU).abs() < 1e-12);
    for &s in &[0.1, 1.7, 4.0, 6.2] {
        let e = c.eval(s);
        assert!((e[0][1] - (2.0 + s.cos())).abs() < 1e-8);
        assert!((e[1][1] + s.sin()).abs() < 1e-5);
    }
}

#[test]
fn warped_laplacian_identity() {
    // for v = u o pi_M: Delta v = Delta_g u + k g(grad f / f, grad u)
    let base: Arc<dyn Manifold> = Arc::new(FlatTorus::new(vec![TAU, TAU]).unwrap());
    let warp: WarpFn = Arc::new(|_, x| (2.0 + x[0].cos() * 0.5, vec![-0.5 * x[0].sin(), 0.0]));
    let w = WarpedProduct::new(base.clone(), WarpedProduct::round_fiber(2).unwrap(), warp, (1.5, 2.5)).unwrap();
    let u = |x: &[f64]| (x[0]).sin() + (x[1] * 2.0).cos() * 0.3;
    let x = [0.8, 1.3, 0.2, -0.4];
    let lhs = laplacian_fd(&w, 0, &x, &|y| u(&y[..2]), 1e-3);
    let lap_u = laplacian_fd(base.as_ref(), 0, &x[..2], &|y| u(y), 1e-3);
    let grad_u = gradient_fd(base.as_ref(), 0, &x[..2], &|y| u(y), 1e-3);
    let (f, df) = (2.0 + 0.5 * 0.8f64.cos(), [-0.5 * 0.8f64.sin(), 0.0]);
    let rhs = lap_u + 2.0 * (df[0] * grad_u[0] + df[1] * grad_u[1]) / f;
    assert!((lhs - rhs).abs() < 1e-8, "{lhs} {rhs}");
}
