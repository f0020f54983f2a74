//! Small numerical helpers: Gauss-Legendre rules, least-squares fits,
//! decay asymptotics and sphere areas.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { z } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (z * pm - pm1) / (z * z - 1.0);
            let dz = pm / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[m - 1 - i] = w[i];
    }
    if m == 1 {
        return (vec![0.0], vec![2.0]);
    }
    (x, w)
}

/// Integrates `f` on [a, b] with `panels` composite Gauss-Legendre panels of order `m`.
pub fn integrate_gl<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, m: usize) -> f64 {
    let (x, w) = gauss_legendre(m);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let mid = lo + 0.5 * h;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(mid + 0.5 * h * xi);
        }
    }
    s * 0.5 * h
}

/// Least-squares polynomial coefficients c0 + c1 t + ... + c_deg t^deg.
pub fn polyfit(t: &[f64], y: &[f64], deg: usize) -> Vec<f64> {
    let m = t.len();
    let a = DMatrix::from_fn(m, deg + 1, |i, j| t[i].powi(j as i32));
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let c = svd.solve(&b, 1e-14).expect("svd solve");
    c.iter().copied().collect()
}

/// Slope of log(y) against log(x) by least squares.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().max(1e-300).ln()).collect();
    polyfit(&lx, &ly, 1)[1]
}

/// Gamma function for positive half-integers and integers (n/2).
pub fn gamma_half(twice: usize) -> f64 {
    // Gamma(twice / 2)
    match twice {
        0 => f64::INFINITY,
        1 => PI.sqrt(),
        2 => 1.0,
        k => (k as f64 / 2.0 - 1.0) * gamma_half(k - 2),
    }
}

/// Surface area of the unit sphere S^{n-1} in R^n (2 for n = 1).
pub fn unit_sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// Volume of the round unit sphere S^k.
pub fn sphere_volume(k: usize) -> f64 {
    unit_sphere_area(k + 1)
}

/// Modified Bessel function K_nu(r) by its large-argument asymptotic series.
/// Accurate to ~1e-12 relative for r >= 8 and |nu| <= 3/2; exact for
/// half-integer orders where the series terminates.
pub fn bessel_k_asymptotic(nu: f64, r: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..30 {
        let kf = k as f64;
        let next = term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * r);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    (PI / (2.0 * r)).sqrt() * (-r).exp() * sum
}

/// Radially symmetric decaying solution of -Delta w + w = 0 in R^n up to a
/// constant: r^{-nu} K_nu(r) with nu = (n-2)/2. Returns (w, w').
pub fn radial_decay(n: usize, r: f64) -> (f64, f64) {
    let nu = (n as f64 - 2.0) / 2.0;
    let rn = r.powf(-nu);
    let w = rn * bessel_k_asymptotic(nu, r);
    let dw = -rn * bessel_k_asymptotic(nu + 1.0, r);
    (w, dw)
}

/// Symmetric positive definite inverse square root of a small SPD matrix.
pub fn spd_inv_sqrt(g: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = g.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Symmetric square root of a small SPD matrix.
pub fn spd_sqrt(g: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = g.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(1) - 2.0).abs() < 1e-15);
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_volume(3) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn bessel_half_integer_is_exact() {
        let r = 9.0;
        let k = bessel_k_asymptotic(0.5, r);
        assert!((k - (PI / (2.0 * r)).sqrt() * (-r).exp()).abs() < 1e-18);
        // K_{3/2}(r) = sqrt(pi/2r) e^{-r} (1 + 1/r)
        let k32 = bessel_k_asymptotic(1.5, r);
        let exact = (PI / (2.0 * r)).sqrt() * (-r).exp() * (1.0 + 1.0 / r);
        assert!(((k32 - exact) / exact).abs() < 1e-14);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [0.2, 0.1, 0.05];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((loglog_slope(&x, &y) - 1.5).abs() < 1e-12);
    }
}
