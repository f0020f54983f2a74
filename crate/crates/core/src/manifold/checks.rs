//! Numerical checks of the normal-coordinate expansions.

use super::{christoffels, exp_map, log_map, metric_at, orthonormal_frame, to_chart, chart_difference, Manifold, Point};
use crate::error::Result;
use crate::numerics::{loglog_slope, polyfit};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Fitted expansion of the metric in normal coordinates along a ray eps * z.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionReport {
    /// Largest linear-in-eps coefficient over g^{ij} and |g|^{1/2}.
    pub linear_max: f64,
    /// Quadratic coefficients of g_ij (row-major).
    pub quadratic_g: Vec<f64>,
    /// Quadratic coefficients of g^{ij} (row-major).
    pub quadratic_ginv: Vec<f64>,
    pub quadratic_sqrt_det: f64,
    /// Slope of log max|g^{ij} - delta_ij| against log eps; None when the
    /// deviation vanishes to rounding (flat metrics).
    pub order: Option<f64>,
}

/// Metric of normal coordinates y -> exp_xi(E y) at y, as a matrix in the
/// orthonormal frame E.
fn normal_metric<M: Manifold + ?Sized>(m: &M, xi: &Point, frame: &DMatrix<f64>, y: &[f64]) -> Result<DMatrix<f64>> {
    let n = m.dim();
    let h = 1e-3;
    let phi = |y: &[f64]| -> Result<Point> {
        let v = frame * DVector::from_column_slice(y);
        let q = exp_map(m, xi, v.as_slice())?;
        to_chart(m, &q, xi.chart)
    };
    let centre = phi(y)?;
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let at = |s: f64| -> Result<Vec<f64>> {
            let mut w = y.to_vec();
            w[j] += s * h;
            Ok(chart_difference(m, xi.chart, &centre.x, &phi(&w)?.x))
        };
        let (p1, m1, p2, m2) = (at(1.0)?, at(-1.0)?, at(2.0)?, at(-2.0)?);
        for i in 0..n {
            jac[(i, j)] = (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * h);
        }
    }
    Ok(jac.transpose() * metric_at(m, &centre) * jac)
}

pub fn normal_expansion_check<M: Manifold + ?Sized>(m: &M, xi: &Point, z: &[f64]) -> Result<ExpansionReport> {
    let n = m.dim();
    let frame = orthonormal_frame(m, xi);
    // symmetric samples separate odd from even terms in the fit
    let eps: Vec<f64> = (1..=8).flat_map(|k| [0.025 * k as f64, -0.025 * k as f64]).collect();
    let mut g_series = vec![Vec::new(); n * n];
    let mut ginv_series = vec![Vec::new(); n * n];
    let mut det_series = Vec::new();
    for &e in &eps {
        let y: Vec<f64> = z.iter().map(|v| e * v).collect();
        let g = normal_metric(m, xi, &frame, &y)?;
        let gi = g.clone().try_inverse().expect("normal metric invertible");
        for i in 0..n * n {
            g_series[i].push(g[(i / n, i % n)] - if i / n == i % n { 1.0 } else { 0.0 });
            ginv_series[i].push(gi[(i / n, i % n)] - if i / n == i % n { 1.0 } else { 0.0 });
        }
        det_series.push(g.determinant().sqrt() - 1.0);
    }
    let fit = |s: &[f64]| polyfit(&eps, s, 6);
    let mut linear_max: f64 = 0.0;
    let mut quadratic_g = Vec::new();
    let mut quadratic_ginv = Vec::new();
    for i in 0..n * n {
        let c = fit(&g_series[i]);
        quadratic_g.push(c[2]);
        let ci = fit(&ginv_series[i]);
        quadratic_ginv.push(ci[2]);
        linear_max = linear_max.max(ci[1].abs());
    }
    let cd = fit(&det_series);
    linear_max = linear_max.max(cd[1].abs());
    // order over eps in {0.2, 0.1, 0.05}
    let picks = [14usize, 6, 2];
    let dev: Vec<f64> = picks
        .iter()
        .map(|&k| ginv_series.iter().map(|s| s[k].abs()).fold(0.0, f64::max))
        .collect();
    let order = if dev.iter().all(|&d| d < 1e-11) {
        None
    } else {
        Some(loglog_slope(&picks.iter().map(|&k| eps[k]).collect::<Vec<_>>(), &dev))
    };
    Ok(ExpansionReport { linear_max, quadratic_g, quadratic_ginv, quadratic_sqrt_det: cd[2], order })
}

/// Deviation of the Jacobian d E_k / d y_h from -delta_hk.
#[derive(Debug, Clone, Serialize)]
pub struct ExpEReport {
    pub eps: Vec<f64>,
    pub deviation: Vec<f64>,
    pub antisymmetric: Vec<f64>,
    /// None when all deviations vanish to rounding.
    pub order: Option<f64>,
}

/// Jacobian at y = 0 of E(y, x) = exp^{-1}_{xi(y)}(x) written in a frame
/// parallel along radial geodesics from xi0 (to first order), with
/// x = exp_{xi0}(eps z).
fn expe_jacobian<M: Manifold + ?Sized>(m: &M, xi0: &Point, z: &[f64], eps: f64) -> Result<DMatrix<f64>> {
    let n = m.dim();
    let e0 = orthonormal_frame(m, xi0);
    let gam = christoffels(m, xi0.chart, &xi0.x);
    let target = exp_map(m, xi0, (&e0 * DVector::from_column_slice(z) * eps).as_slice())?;
    let h = 1e-4;
    let evaluate = |y: &[f64]| -> Result<DVector<f64>> {
        let vy = &e0 * DVector::from_column_slice(y);
        let xi = exp_map(m, xi0, vy.as_slice())?;
        let xi = to_chart(m, &xi, xi0.chart)?;
        // E(y)^i_a = E0^i_a - Gamma^i_jk (E0 y)^j E0^k_a
        let mut frame = e0.clone();
        for i in 0..n {
            for a in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        s += gam[i][j][k] * vy[j] * e0[(k, a)];
                    }
                }
                frame[(i, a)] -= s;
            }
        }
        let v = log_map(m, &xi, &target)?;
        Ok(frame.lu().solve(&DVector::from_column_slice(&v)).expect("frame invertible"))
    };
    let mut jac = DMatrix::zeros(n, n);
    for hh in 0..n {
        let at = |s: f64| {
            let mut y = vec![0.0; n];
            y[hh] = s * h;
            evaluate(&y)
        };
        let d = (at(1.0)? - at(-1.0)?) * (8.0 / (12.0 * h)) - (at(2.0)? - at(-2.0)?) * (1.0 / (12.0 * h));
        for k in 0..n {
            jac[(k, hh)] = d[k];
        }
    }
    Ok(jac)
}

pub fn expe_check<M: Manifold + ?Sized>(m: &M, xi0: &Point, z: &[f64], eps: &[f64]) -> Result<ExpEReport> {
    let n = m.dim();
    let mut deviation = Vec::new();
    let mut antisymmetric = Vec::new();
    for &e in eps {
        let j = expe_jacobian(m, xi0, z, e)?;
        let dev = (&j + DMatrix::identity(n, n)).amax();
        let anti = ((&j - j.transpose()) * 0.5).amax();
        deviation.push(dev);
        antisymmetric.push(anti);
    }
    let order = if deviation.iter().all(|&d| d < 1e-9) { None } else { Some(loglog_slope(eps, &deviation)) };
    Ok(ExpEReport { eps: eps.to_vec(), deviation, antisymmetric, order })
}

/// max |d_k g_ij - g_lj Gamma^l_ik - g_il Gamma^l_jk| with d_k g from plain differences.
pub fn metric_compatibility<M: Manifold + ?Sized>(m: &M, chart: usize, x: &[f64]) -> f64 {
    let n = m.dim();
    let g = m.metric(chart, x);
    let gam = christoffels(m, chart, x);
    let h = 1e-5 * m.chart_scale();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let at = |s: f64| {
            let mut y = x.to_vec();
            y[k] += s * h;
            m.metric(chart, &y)
        };
        let dg = (at(1.0) - at(-1.0)) * (8.0 / (12.0 * h)) - (at(2.0) - at(-2.0)) * (1.0 / (12.0 * h));
        for i in 0..n {
            for j in 0..n {
                let mut s = dg[(i, j)];
                for l in 0..n {
                    s -= g[(l, j)] * gam[l][i][k] + g[(i, l)] * gam[l][j][k];
                }
                worst = worst.max(s.abs());
            }
        }
    }
    worst
}
