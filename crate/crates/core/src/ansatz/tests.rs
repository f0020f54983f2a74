use super::*;
use crate::coeffs::CoefficientField;
use crate::ground_state::solve_ground_state;
use crate::manifold::{FlatTorus, Point};
use rand::{Rng, SeedableRng};
use std::f64::consts::TAU;
use std::sync::OnceLock;

fn profile() -> Arc<GroundStateProfile> {
    static P: OnceLock<Arc<GroundStateProfile>> = OnceLock::new();
    P.get_or_init(|| Arc::new(solve_ground_state(2, 4.0, 1e-9).unwrap())).clone()
}

fn torus_problem(coeffs: CoefficientField) -> Problem {
    let t: Arc<dyn Manifold> = Arc::new(FlatTorus::new(vec![TAU, TAU]).unwrap());
    Problem::new(t, coeffs, profile(), 2.5).unwrap()
}

#[test]
fn cutoff_shapes() {
    for c in [Cutoff::Smooth, Cutoff::Bump] {
        assert_eq!(c.eval(0.0, 2.0), 1.0);
        assert_eq!(c.eval(1.0, 2.0), 1.0);
        assert_eq!(c.eval(2.0, 2.0), 0.0);
        let mut last = 1.0;
        for k in 1..100 {
            let v = c.eval(1.0 + k as f64 / 100.0, 2.0);
            assert!(v <= last && v >= 0.0);
            last = v;
        }
    }
    assert!((Cutoff::Smooth.eval(1.5, 2.0) - 0.5).abs() < 1e-15);
}

#[test]
fn constant_field_inner_product() {
    let pr = torus_problem(CoefficientField::constant(1.0, 1.0, 1.0));
    let sp = EpsSpace::new(&pr, 0.5).unwrap();
    let one = vec![1.0; sp.len()];
    let v = sp.inner(&one, &one);
    assert!((v - TAU * TAU / 0.25).abs() < 1e-9 * v);
    let mut rng = rand::rngs::StdRng::seed_from_u64(3);
    let u: Vec<f64> = (0..sp.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w: Vec<f64> = (0..sp.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let two_u: Vec<f64> = u.iter().map(|x| 2.0 * x).collect();
    assert!((sp.inner(&two_u, &w) - 2.0 * sp.inner(&u, &w)).abs() < 1e-12 * sp.inner(&u, &w).abs().max(1.0));
    assert!((sp.inner(&u, &w) - sp.inner(&w, &u)).abs() < 1e-10 * sp.norm(&u) * sp.norm(&w));
    assert!(sp.inner(&u, &u) > 0.0);
}

#[test]
fn istar_on_constants_and_eigenfunctions() {
    let pr = torus_problem(CoefficientField::from_expressions("1", "1", "1 + 0.3*sin(x2)", 2).unwrap());
    let sp = EpsSpace::new(&pr, 0.2).unwrap();
    let (u, st) = sp.istar(&vec![1.0; sp.len()]).unwrap();
    assert!(u.iter().all(|v| (v - 1.0).abs() < 1e-9));
    assert!(st.residual <= 1e-10);
    let pr = torus_problem(CoefficientField::constant(1.0, 1.0, 1.0));
    let sp = EpsSpace::new(&pr, 0.2).unwrap();
    let w: Vec<f64> = (0..sp.len()).map(|i| sp.grid.node(i)[0].cos()).collect();
    let (u, _) = sp.istar(&w).unwrap();
    for (a, b) in u.iter().zip(&w) {
        assert!((a - b / 1.04).abs() < 1e-9);
    }
}

#[test]
fn peak_matches_defining_formula() {
    let pr = torus_problem(CoefficientField::constant(1.0, 1.0, 1.0));
    let eps = 0.2;
    let sp = EpsSpace::new(&pr, eps).unwrap();
    let xi = sp.grid.point(sp.grid.flat_index(&[10, 20]));
    let ans = PeakAnsatz::new(&sp, &xi).unwrap();
    let (imax, vmax) = ans.w.iter().cloned().enumerate().fold((0, 0.0), |b, (i, v)| if v > b.1 { (i, v) } else { b });
    assert_eq!(imax, sp.grid.flat_index(&[10, 20]));
    assert!((vmax - profile().peak()).abs() < 1e-12);
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    for _ in 0..100 {
        let k = rng.random_range(0..sp.len());
        let x = sp.grid.node(k);
        let d = crate::manifold::chart_difference(pr.manifold.as_ref(), 0, &xi.x, &x);
        let s = (d[0] * d[0] + d[1] * d[1]).sqrt();
        let expect = if s >= 2.5 { 0.0 } else { profile().value(s / eps) * Cutoff::Smooth.eval(s, 2.5) };
        assert!((ans.w[k] - expect).abs() < 1e-12);
    }
    for (k, v) in ans.w.iter().enumerate() {
        let d = crate::manifold::chart_difference(pr.manifold.as_ref(), 0, &xi.x, &sp.grid.node(k));
        if (d[0] * d[0] + d[1] * d[1]).sqrt() > 2.5 {
            assert_eq!(*v, 0.0);
        }
    }
    assert!(matches!(PeakAnsatz::new(&EpsSpace::new(&pr, 3.0).unwrap(), &xi), Err(Error::EpsilonTooLarge { .. })));
}

#[test]
fn kernel_fields_vanish_at_center_and_are_odd() {
    let pr = torus_problem(CoefficientField::constant(1.0, 1.0, 1.0));
    let sp = EpsSpace::new(&pr, 0.2).unwrap();
    let c = [40usize, 40];
    let xi = sp.grid.point(sp.grid.flat_index(&c));
    let ans = PeakAnsatz::new(&sp, &xi).unwrap();
    assert_eq!(ans.z[0][sp.grid.flat_index(&c)], 0.0);
    for (di, dj) in [(1usize, 0usize), (3, 2), (5, 7)] {
        let plus = sp.grid.flat_index(&[c[0] + di, c[1] + dj]);
        let minus = sp.grid.flat_index(&[c[0] - di, c[1] + dj]);
        assert!((ans.z[0][plus] + ans.z[0][minus]).abs() < 1e-13);
        assert!((ans.z[1][plus] - ans.z[1][minus]).abs() < 1e-13);
    }
    assert!((&ans.gram - ans.gram.transpose()).amax() == 0.0);
}

#[test]
fn projections() {
    let pr = torus_problem(CoefficientField::from_expressions("1 + 0.5*cos(x1)", "1", "1", 2).unwrap());
    let sp = EpsSpace::new(&pr, 0.2).unwrap();
    let ans = PeakAnsatz::new(&sp, &Point::new(0, vec![1.0, 2.0])).unwrap();
    let z1 = &ans.z[0];
    let pz = ans.project_orthogonal(z1);
    assert!(sp.norm(&pz) <= 1e-10 * sp.norm(z1));
    let mut rng = rand::rngs::StdRng::seed_from_u64(9);
    let u: Vec<f64> = (0..sp.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..sp.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let pu = ans.project_orthogonal(&u);
    let ppu = ans.project_orthogonal(&pu);
    let diff: Vec<f64> = pu.iter().zip(&ppu).map(|(a, b)| a - b).collect();
    assert!(sp.norm(&diff) <= 1e-10 * sp.norm(&pu));
    assert!(ans.orthogonality_defect(&pu, sp.norm(&pu)) < 1e-10);
    let lhs = sp.inner(&pu, &v);
    let rhs = sp.inner(&u, &ans.project_orthogonal(&v));
    assert!((lhs - rhs).abs() <= 1e-10 * sp.norm(&u) * sp.norm(&v));
}
