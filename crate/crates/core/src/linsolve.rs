//! Matrix-free Krylov solvers: preconditioned CG and MINRES.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// True relative residual |b - A x| / |b| at exit.
    pub residual: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn true_residual(apply: &dyn Fn(&[f64]) -> Vec<f64>, b: &[f64], x: &[f64]) -> Vec<f64> {
    let ax = apply(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

/// Preconditioned conjugate gradients for symmetric positive definite A.
pub fn pcg(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let bn = norm2(b);
    let mut x = vec![0.0; b.len()];
    if bn == 0.0 {
        return Ok((x, SolveStats { iterations: 0, residual: 0.0 }));
    }
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverBreakdown(format!("CG curvature {pap:e} at iteration {it}")));
        }
        let alpha = rz / pap;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        if norm2(&r) <= tol * bn {
            let res = norm2(&true_residual(apply, b, &x)) / bn;
            if res <= 10.0 * tol {
                return Ok((x, SolveStats { iterations: it, residual: res }));
            }
            r = true_residual(apply, b, &x);
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    let res = norm2(&true_residual(apply, b, &x)) / bn;
    Err(Error::NonConvergence { what: format!("CG stalled at relative residual {res:e}"), iterations: max_iter })
}

/// Preconditioned MINRES for symmetric (possibly indefinite) A with a
/// symmetric positive definite preconditioner. Restarts from the current
/// iterate when the recursively updated residual drifts from the true one.
pub fn minres(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let bn = norm2(b);
    let n = b.len();
    let mut x = vec![0.0; n];
    if bn == 0.0 {
        return Ok((x, SolveStats { iterations: 0, residual: 0.0 }));
    }
    let mut total = 0;
    for _restart in 0..4 {
        let mut v = true_residual(apply, b, &x);
        let res0 = norm2(&v) / bn;
        if res0 <= tol {
            return Ok((x, SolveStats { iterations: total, residual: res0 }));
        }
        let mut v_old = vec![0.0; n];
        let mut z = precond(&v);
        let mut gamma = dot(&z, &v);
        if !(gamma > 0.0) {
            return Err(Error::SolverBreakdown("preconditioner is not positive definite".into()));
        }
        gamma = gamma.sqrt();
        let mut gamma_old = 1.0;
        let mut eta = gamma;
        let eta0 = gamma;
        let (mut s_old, mut s, mut c_old, mut c) = (0.0, 0.0, 1.0, 1.0);
        let mut w = vec![0.0; n];
        let mut w_old = vec![0.0; n];
        // stop on the preconditioned estimate, scaled to the true target
        let target = tol / res0;
        while total < max_iter {
            total += 1;
            for zi in z.iter_mut() {
                *zi /= gamma;
            }
            let az = apply(&z);
            let delta = dot(&az, &z);
            let mut v_new = az;
            axpy(&mut v_new, -delta / gamma, &v);
            axpy(&mut v_new, -gamma / gamma_old, &v_old);
            let z_new = precond(&v_new);
            let g2 = dot(&z_new, &v_new);
            if g2 < 0.0 {
                return Err(Error::SolverBreakdown("preconditioner is not positive definite".into()));
            }
            let gamma_new = g2.sqrt();
            let alpha0 = c * delta - c_old * s * gamma;
            let alpha1 = (alpha0 * alpha0 + gamma_new * gamma_new).sqrt();
            let alpha2 = s * delta + c_old * c * gamma;
            let alpha3 = s_old * gamma;
            if alpha1 == 0.0 {
                break;
            }
            c_old = c;
            s_old = s;
            c = alpha0 / alpha1;
            s = gamma_new / alpha1;
            let mut w_new = z.clone();
            axpy(&mut w_new, -alpha3, &w_old);
            axpy(&mut w_new, -alpha2, &w);
            for wi in w_new.iter_mut() {
                *wi /= alpha1;
            }
            axpy(&mut x, c * eta, &w_new);
            eta *= -s;
            v_old = v;
            v = v_new;
            z = z_new;
            w_old = w;
            w = w_new;
            gamma_old = gamma;
            gamma = gamma_new;
            if eta.abs() / eta0 < target.min(1.0) * 0.5 || gamma_new == 0.0 {
                break;
            }
        }
        let res = norm2(&true_residual(apply, b, &x)) / bn;
        if res <= tol {
            return Ok((x, SolveStats { iterations: total, residual: res }));
        }
        if total >= max_iter {
            return Err(Error::NonConvergence { what: format!("MINRES stalled at relative residual {res:e}"), iterations: total });
        }
    }
    let res = norm2(&true_residual(apply, b, &x)) / bn;
    Err(Error::NonConvergence { what: format!("MINRES restarts exhausted at relative residual {res:e}"), iterations: total })
}
