use super::Problem;
use crate::error::{Error, Result};
use crate::grid::{DiscreteField, PeriodicGrid};
use crate::linsolve::{dot, pcg, SolveStats};
use std::sync::Arc;

/// The space H_eps discretized on a periodic grid.
///
/// Fields are nodal vectors. With A u = -eps^2 d_i(sqrt(g) c g^{ij} d_j u) + a sqrt(g) u
/// (spectral derivatives) the scalar product is <u, v>_eps = eps^{-n} cell v.A u
/// (spectral derivatives, plus a constant-coefficient term restoring the
/// Nyquist modes that first derivatives annihilate)
/// and eps^{-n} int w v = eps^{-n} cell v.(sqrt(g) w).
pub struct EpsSpace {
    pub problem: Problem,
    pub eps: f64,
    pub grid: Arc<PeriodicGrid>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    a_w: Vec<f64>,
    b_w: Vec<f64>,
    /// sqrt(g) c g^{ij}, row-major over (i, j).
    flux: Vec<Vec<f64>>,
    inv_symbol: Vec<f64>,
    nyquist: Vec<f64>,
    /// eps^{-n} times the coordinate cell volume.
    pub quad_scale: f64,
}

impl std::fmt::Debug for EpsSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "EpsSpace(eps = {}, {:?})", self.eps, self.grid)
    }
}

impl EpsSpace {
    pub fn new(problem: &Problem, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        let grid = PeriodicGrid::for_epsilon(problem.manifold.clone(), eps, problem.nodes_per_eps)?;
        Self::with_grid(problem, eps, Arc::new(grid))
    }

    pub fn with_grid(problem: &Problem, eps: f64, grid: Arc<PeriodicGrid>) -> Result<Self> {
        let n = grid.dim();
        let len = grid.len();
        let (mut a, mut b, mut c) = (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
        for i in 0..len {
            let v = problem.coeffs.positive_at(&grid.node(i))?;
            a.push(v.a);
            b.push(v.b);
            c.push(v.c);
        }
        let a_w: Vec<f64> = a.iter().zip(&grid.sqrt_det).map(|(x, s)| x * s).collect();
        let b_w: Vec<f64> = b.iter().zip(&grid.sqrt_det).map(|(x, s)| x * s).collect();
        let mut flux = vec![vec![0.0; len]; n * n];
        for (ij, f) in flux.iter_mut().enumerate() {
            let (i, j) = (ij / n, ij % n);
            for k in 0..len {
                f[k] = grid.sqrt_det[k] * c[k] * grid.inverse_metric(k, i, j);
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / len as f64;
        let flux_mean: Vec<f64> = flux.iter().map(|f| mean(f)).collect();
        let a_mean = mean(&a_w);
        let diag: Vec<f64> = (0..n).map(|d| eps * eps * flux_mean[d * n + d]).collect();
        let nyquist = grid.nyquist_symbol(&diag);
        let mut inv_symbol = grid.symbol(|k| {
            let mut q = 0.0;
            for i in 0..n {
                for j in 0..n {
                    q += k[i] * k[j] * flux_mean[i * n + j];
                }
            }
            eps * eps * q + a_mean
        });
        for (s, q) in inv_symbol.iter_mut().zip(&nyquist) {
            *s = 1.0 / (*s + q);
        }
        let quad_scale = eps.powi(-(n as i32)) * grid.cell;
        Ok(Self { problem: problem.clone(), eps, grid, a, b, c, a_w, b_w, flux, inv_symbol, nyquist, quad_scale })
    }

    pub fn n(&self) -> usize {
        self.grid.dim()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn field(&self, values: Vec<f64>) -> DiscreteField {
        DiscreteField { grid: self.grid.clone(), values }
    }

    pub fn apply_a(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n();
        let grad = self.grid.gradient(u);
        let fl: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut out = vec![0.0; u.len()];
                for j in 0..n {
                    let m = &self.flux[i * n + j];
                    if self.grid.flat && i != j {
                        continue;
                    }
                    for k in 0..u.len() {
                        out[k] += m[k] * grad[j][k];
                    }
                }
                out
            })
            .collect();
        let div = self.grid.divergence(&fl);
        let e2 = self.eps * self.eps;
        let nyq = self.grid.apply_symbol(u, &self.nyquist);
        div.iter().zip(u).zip(&self.a_w).zip(&nyq).map(|(((d, x), aw), q)| -e2 * d + aw * x + q).collect()
    }

    /// Constant-coefficient approximation of A^{-1} by FFT.
    pub fn precondition(&self, r: &[f64]) -> Vec<f64> {
        self.grid.apply_symbol(r, &self.inv_symbol)
    }

    /// sqrt(g) w: the nodal form of v -> int w v.
    pub fn load(&self, w: &[f64]) -> Vec<f64> {
        w.iter().zip(&self.grid.sqrt_det).map(|(x, s)| x * s).collect()
    }

    /// b sqrt(g) w.
    pub fn load_b(&self, w: &[f64]) -> Vec<f64> {
        w.iter().zip(&self.b_w).map(|(x, s)| x * s).collect()
    }

    pub fn b_weights(&self) -> &[f64] {
        &self.b_w
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.quad_scale * dot(&self.apply_a(u), v)
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    /// |u|_{q,eps} = (eps^{-n} int |u|^q)^{1/q}
    pub fn lp_norm(&self, u: &[f64], q: f64) -> f64 {
        let s: f64 = u.iter().zip(&self.grid.sqrt_det).map(|(x, w)| x.abs().powf(q) * w).sum();
        (self.quad_scale * s).powf(1.0 / q)
    }

    /// eps^{-n} int u v
    pub fn l2_pairing(&self, u: &[f64], v: &[f64]) -> f64 {
        self.quad_scale * dot(&self.load(u), v)
    }

    /// Solve A u = rhs (rhs already in nodal load form).
    pub fn solve_a(&self, rhs: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
        pcg(&|x| self.apply_a(x), &|r| self.precondition(r), rhs, 1e-11, 2000)
    }

    /// i*_eps(w): the solution of -eps^2 div(c grad u) + a u = w.
    pub fn istar(&self, w: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
        self.solve_a(&self.load(w))
    }

    /// J_eps(u) = |u|_eps^2 / 2 - eps^{-n} int b F(u).
    pub fn energy(&self, u: &[f64]) -> f64 {
        let pr = &self.problem;
        let pot: f64 = u.iter().zip(&self.b_w).map(|(x, bw)| pr.big_f(*x) * bw).sum();
        0.5 * self.inner(u, u) - self.quad_scale * pot
    }

    /// Nodal form of the equation residual: A u - b sqrt(g) f(u).
    pub fn equation_residual(&self, u: &[f64]) -> Vec<f64> {
        let au = self.apply_a(u);
        au.iter().zip(u).zip(&self.b_w).map(|((x, v), bw)| x - bw * self.problem.f(*v)).collect()
    }

    /// Pointwise strong residual -eps^2 div(c grad u) + a u - b f(u) divided
    /// by the volume density, i.e. the equation itself at each node.
    pub fn strong_residual(&self, u: &[f64]) -> Vec<f64> {
        self.equation_residual(u).iter().zip(&self.grid.sqrt_det).map(|(r, s)| r / s).collect()
    }
}

/// <u, v>_eps for fields on the space's grid.
pub fn eps_inner(space: &EpsSpace, u: &DiscreteField, v: &DiscreteField) -> Result<f64> {
    if !Arc::ptr_eq(&u.grid, &space.grid) {
        return Err(Error::MeshMismatch);
    }
    u.same_mesh(v)?;
    Ok(space.inner(&u.values, &v.values))
}
