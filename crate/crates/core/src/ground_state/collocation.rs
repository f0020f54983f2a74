//! Chebyshev collocation for the radial ground-state problem.
//!
//! Used as an independent cross-check of the shooting solver: a global
//! spectral discretisation on [0, L] with U'(0) = 0 and a Robin condition
//! matching the exponential far field at r = L, solved by Newton's method
//! with continuation in the dimension parameter starting from the exact
//! one-dimensional soliton.

use crate::error::{check_exponent, Error, Result};
use crate::numerics::radial_decay;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct CollocationProfile {
    pub length: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    weights: Vec<f64>,
}

impl CollocationProfile {
    /// Barycentric interpolation of the collocation solution.
    pub fn value(&self, r: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..self.r.len() {
            let d = r - self.r[j];
            if d == 0.0 {
                return self.u[j];
            }
            let w = self.weights[j] / d;
            num += w * self.u[j];
            den += w;
        }
        num / den
    }

    pub fn peak(&self) -> f64 {
        *self.u.last().unwrap()
    }
}

/// Chebyshev-Lobatto points x_j = cos(pi j / N) and the differentiation matrix.
fn cheb(n: usize) -> (Vec<f64>, DMatrix<f64>) {
    let x: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
    let c = |j: usize| if j == 0 || j == n { 2.0 } else { 1.0 };
    let sign = |j: usize| if j % 2 == 0 { 1.0 } else { -1.0 };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) * sign(i + j) / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    (x, d)
}

/// Solves the radial problem by collocation with `nodes + 1` points on [0, length].
pub fn collocation_profile(n: usize, p: f64, length: f64, nodes: usize) -> Result<CollocationProfile> {
    check_exponent(n, p)?;
    let (x, dx) = cheb(nodes);
    let r: Vec<f64> = x.iter().map(|xi| 0.5 * length * (1.0 + xi)).collect();
    let d1 = dx * (2.0 / length);
    let d2 = &d1 * &d1;
    let m = nodes + 1;

    // exact soliton for the one-dimensional problem
    let q = p - 2.0;
    let mut u = DVector::from_fn(m, |j, _| {
        (0.5 * p / (0.5 * q * r[j]).cosh().powi(2)).powf(1.0 / q)
    });

    let steps = 8 * (n - 1).max(1);
    for k in 0..=steps {
        let dim = if n == 1 { 1.0 } else { 1.0 + (n as f64 - 1.0) * k as f64 / steps as f64 };
        if n == 1 && k > 0 {
            break;
        }
        // Robin coefficient from the far field of the current dimension
        let kappa = robin(dim, length);
        for it in 0..60 {
            let mut res = DVector::zeros(m);
            let mut jac = DMatrix::zeros(m, m);
            for i in 0..m {
                if i == 0 {
                    // r = L
                    for j in 0..m {
                        jac[(0, j)] = d1[(0, j)];
                    }
                    jac[(0, 0)] -= kappa;
                    res[0] = (d1.row(0) * &u)[0] - kappa * u[0];
                } else if i == nodes {
                    for j in 0..m {
                        jac[(i, j)] = d1[(i, j)];
                    }
                    res[i] = (d1.row(i) * &u)[0];
                } else {
                    let ui = u[i];
                    let pos = ui.max(0.0);
                    let coef = (dim - 1.0) / r[i];
                    for j in 0..m {
                        jac[(i, j)] = d2[(i, j)] + coef * d1[(i, j)];
                    }
                    jac[(i, i)] += -1.0 + (p - 1.0) * pos.powf(p - 2.0);
                    res[i] = (d2.row(i) * &u)[0] + coef * (d1.row(i) * &u)[0] - ui + pos.powf(p - 1.0);
                }
            }
            let du = jac
                .lu()
                .solve(&res)
                .ok_or_else(|| Error::SolverBreakdown("singular collocation Jacobian".into()))?;
            u -= &du;
            if du.amax() < 1e-13 * u.amax() {
                break;
            }
            if it == 59 {
                return Err(Error::NonConvergence { what: "collocation Newton".into(), iterations: 60 });
            }
        }
    }
    let weights = (0..m)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == nodes {
                0.5 * s
            } else {
                s
            }
        })
        .collect();
    Ok(CollocationProfile { length, r, u: u.iter().copied().collect(), weights })
}

/// w'/w for the decaying solution of -w'' - (d-1)/r w' + w = 0 at r = L.
fn robin(dim: f64, length: f64) -> f64 {
    let whole = dim.round();
    if (dim - whole).abs() < 1e-12 {
        let (w, dw) = radial_decay(whole as usize, length);
        return dw / w;
    }
    // r^{-nu} K_nu(r) with nu = (d-2)/2 for a fractional dimension
    let nu = (dim - 2.0) / 2.0;
    let k = |nu: f64| crate::numerics::bessel_k_asymptotic(nu, length);
    -k(nu + 1.0) / k(nu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_soliton() {
        let c = collocation_profile(1, 4.0, 20.0, 120).unwrap();
        assert!((c.peak() - 2f64.sqrt()).abs() < 1e-10);
        assert!((c.value(1.3) - 2f64.sqrt() / 1.3f64.cosh()).abs() < 1e-10);
    }
}
