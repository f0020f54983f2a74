use lsred::coeffs::{gamma_gradient, gamma_functional, CoefficientField};
use lsred::expr::Expr;
use lsred::ground_state::{rescale_profile, solve_ground_state, GroundStateProfile};
use lsred::grid::{DiscreteField, PeriodicGrid, TrigInterpolant};
use lsred::manifold::{exp_map, log_map, normalize, FlatTorus, Manifold, Point, RoundSphere};
use proptest::prelude::*;
use std::sync::{Arc, OnceLock};

fn profile() -> Arc<GroundStateProfile> {
    static P: OnceLock<Arc<GroundStateProfile>> = OnceLock::new();
    P.get_or_init(|| Arc::new(solve_ground_state(2, 4.0, 1e-10).unwrap())).clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rescaled_profile_solves_frozen_equation(
        a in 0.2f64..4.0, b in 0.2f64..4.0, c in 0.2f64..4.0,
        z0 in -4.0f64..4.0, z1 in -4.0f64..4.0,
    ) {
        let co = CoefficientField::constant(a, b, c);
        let v = rescale_profile(profile(), &co, &[0.0, 0.0]).unwrap();
        let scale = v.value(&[0.0, 0.0]).powi(3).max(1.0) * (a + b + c);
        prop_assert!(v.residual(&[z0, z1]).abs() <= 1e-7 * scale);
    }

    #[test]
    fn gamma_scales_with_the_potential(a in 0.2f64..4.0, b in 0.2f64..4.0, c in 0.2f64..4.0, t in 0.2f64..5.0) {
        // Gamma is proportional to b^{-2/(p-2)}, which is 1/b at p = 4
        let g = |a: f64, b: f64, c: f64| {
            let co = CoefficientField::constant(a, b, c);
            gamma_functional(co.at(&[0.0, 0.0]), 2, 4.0)
        };
        prop_assert!((g(a, t * b, c) / g(a, b, c) - 1.0 / t).abs() < 1e-12);
    }

    #[test]
    fn gamma_gradient_matches_differences(x0 in 0.0f64..6.0, x1 in 0.0f64..6.0) {
        let co = CoefficientField::from_expressions("1.2 + 0.4*sin(x1)*cos(x2)", "1 + 0.3*cos(x2)", "0.9 + 0.2*sin(x1 + x2)", 2).unwrap();
        let g = gamma_gradient(&co, &[x0, x1], 2, 4.0);
        let h = 1e-5;
        for d in 0..2 {
            let (mut up, mut down) = ([x0, x1], [x0, x1]);
            up[d] += h;
            down[d] -= h;
            let fd = (gamma_functional(co.at(&up), 2, 4.0) - gamma_functional(co.at(&down), 2, 4.0)) / (2.0 * h);
            prop_assert!((fd - g[d]).abs() < 1e-7);
        }
    }

    #[test]
    fn sphere_log_inverts_exp(p0 in -1.0f64..1.0, p1 in -1.0f64..1.0, v0 in -1.0f64..1.0, v1 in -1.0f64..1.0) {
        let s2 = RoundSphere::new(2, 1.0).unwrap();
        let mut p = Point::new(0, vec![p0, p1]);
        normalize(&s2, &mut p, None);
        let v = [v0, v1];
        let back = log_map(&s2, &p, &exp_map(&s2, &p, &v).unwrap()).unwrap();
        prop_assert!((back[0] - v0).abs() < 1e-8 && (back[1] - v1).abs() < 1e-8);
    }

    #[test]
    fn expressions_agree_with_closures(x0 in -3.0f64..3.0, x1 in -3.0f64..3.0) {
        let e = Expr::parse("1 + 0.5*cos(x1) - x2^2/3 + exp(-x1*x2)/2", 2).unwrap();
        let direct = 1.0 + 0.5 * x0.cos() - x1 * x1 / 3.0 + (-x0 * x1).exp() / 2.0;
        prop_assert!((e.eval(&[x0, x1]) - direct).abs() < 1e-13);
        let (_, g) = e.eval_with_gradient(&[x0, x1]);
        let dx = -0.5 * x0.sin() - x1 * (-x0 * x1).exp() / 2.0;
        prop_assert!((g[0] - dx).abs() < 1e-12);
    }

    #[test]
    fn interpolant_reproduces_band_limited_fields(k0 in 0i32..6, k1 in 0i32..6, ph in 0.0f64..6.0, y0 in 0.0f64..6.2, y1 in 0.0f64..6.2) {
        let t: Arc<dyn Manifold> = Arc::new(FlatTorus::new(vec![std::f64::consts::TAU; 2]).unwrap());
        let grid = Arc::new(PeriodicGrid::new(t, vec![16, 12]).unwrap());
        let f = move |x: &[f64]| (k0 as f64 * x[0] - k1 as f64 * x[1] + ph).cos();
        let u = DiscreteField::from_fn(grid, f);
        let it = TrigInterpolant::new(&u);
        prop_assert!((it.eval(&[y0, y1]) - f(&[y0, y1])).abs() < 1e-11);
    }
}
