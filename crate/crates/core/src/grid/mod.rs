//! Tensor Fourier grids on manifolds whose first chart is periodic in every
//! coordinate (flat tori, closed curves, warped products of those).

mod interp;
mod spectral;

pub use spectral::Spectral;
pub use interp::TrigInterpolant;

use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point};
use rustfft::num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

/// Smallest even integer >= m whose only prime factors are 2, 3 and 5.
pub fn good_size(m: usize) -> usize {
    let mut k = m.max(2);
    loop {
        if k % 2 == 0 {
            let mut r = k;
            for f in [2, 3, 5] {
                while r % f == 0 {
                    r /= f;
                }
            }
            if r == 1 {
                return k;
            }
        }
        k += 1;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshDescriptor {
    pub manifold: String,
    pub periods: Vec<f64>,
    pub shape: Vec<usize>,
    pub nodes: usize,
    pub flat: bool,
    pub min_spacing: f64,
}

pub struct PeriodicGrid {
    pub manifold: Arc<dyn Manifold>,
    pub periods: Vec<f64>,
    pub shape: Vec<usize>,
    pub spectral: Spectral,
    /// Coordinate volume of one cell.
    pub cell: f64,
    pub sqrt_det: Vec<f64>,
    /// Row-major n x n inverse metric per node; empty on flat grids.
    pub ginv: Vec<f64>,
    pub flat: bool,
    /// Angular wavenumbers along each axis on the half spectrum, Nyquist zeroed.
    wave: Vec<Vec<f64>>,
    /// Smallest eigenvalue of g over the nodes.
    pub min_metric_eig: f64,
}

impl std::fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PeriodicGrid({:?} on {})", self.shape, self.manifold.describe())
    }
}

impl PeriodicGrid {
    pub fn new(manifold: Arc<dyn Manifold>, shape: Vec<usize>) -> Result<Self> {
        let n = manifold.dim();
        let periods: Vec<f64> = manifold
            .periods(0)
            .into_iter()
            .map(|t| t.ok_or_else(|| Error::Unsupported(format!("{} has a non-periodic chart", manifold.describe()))))
            .collect::<Result<_>>()?;
        if shape.len() != n || shape.iter().any(|&m| m < 4 || m % 2 == 1) {
            return Err(Error::InvalidParameter(format!("grid shape {shape:?} must hold {n} even sizes >= 4")));
        }
        let spectral = Spectral::new(&shape);
        let cell: f64 = periods.iter().zip(&shape).map(|(t, &m)| t / m as f64).product();
        let wave = (0..n)
            .map(|d| {
                let m = shape[d];
                spectral
                    .frequencies(d)
                    .into_iter()
                    .map(|k| if k.abs() as usize == m / 2 { 0.0 } else { std::f64::consts::TAU * k / periods[d] })
                    .collect()
            })
            .collect();
        let mut g = Self {
            manifold,
            periods,
            shape,
            spectral,
            cell,
            sqrt_det: Vec::new(),
            ginv: Vec::new(),
            flat: true,
            wave,
            min_metric_eig: 1.0,
        };
        let len = g.len();
        let mut sqrt_det = Vec::with_capacity(len);
        let mut ginv = Vec::with_capacity(len * n * n);
        let mut flat = true;
        let mut min_eig = f64::INFINITY;
        for i in 0..len {
            let m = g.manifold.metric(0, &g.node(i));
            let id = nalgebra::DMatrix::<f64>::identity(n, n);
            if (&m - &id).amax() > 1e-14 {
                flat = false;
            }
            min_eig = min_eig.min(m.symmetric_eigenvalues().min());
            sqrt_det.push(m.determinant().sqrt());
            let mi = m.try_inverse().ok_or_else(|| Error::InvalidParameter("degenerate metric on grid".into()))?;
            ginv.extend(mi.transpose().iter());
        }
        g.flat = flat;
        g.min_metric_eig = min_eig;
        if flat {
            g.sqrt_det = vec![1.0; len];
        } else {
            g.sqrt_det = sqrt_det;
            g.ginv = ginv;
        }
        Ok(g)
    }

    /// Grid with at least `nodes_per_eps` nodes per length eps along every
    /// axis, measured in the largest metric stretch of that axis.
    pub fn for_epsilon(manifold: Arc<dyn Manifold>, eps: f64, nodes_per_eps: f64) -> Result<Self> {
        let n = manifold.dim();
        let periods: Vec<f64> = manifold.periods(0).into_iter().map(|t| t.unwrap_or(f64::NAN)).collect();
        if periods.iter().any(|t| t.is_nan()) {
            return Err(Error::Unsupported(format!("{} has a non-periodic chart", manifold.describe())));
        }
        let probe = 24usize;
        let mut stretch = vec![0.0f64; n];
        for k in 0..probe.pow(n as u32) {
            let mut rem = k;
            let x: Vec<f64> = (0..n)
                .map(|d| {
                    let j = rem % probe;
                    rem /= probe;
                    periods[d] * j as f64 / probe as f64
                })
                .collect();
            let g = manifold.metric(0, &x);
            for d in 0..n {
                stretch[d] = stretch[d].max(g[(d, d)].sqrt());
            }
        }
        let shape = (0..n).map(|d| good_size(((nodes_per_eps * periods[d] * stretch[d] / eps).ceil() as usize).max(16))).collect();
        Self::new(manifold, shape)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.spectral.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            idx[d] = flat % self.shape[d];
            flat /= self.shape[d];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &m)| acc * m + i % m)
    }

    pub fn node(&self, i: usize) -> Vec<f64> {
        self.multi_index(i).iter().enumerate().map(|(d, &j)| self.periods[d] * j as f64 / self.shape[d] as f64).collect()
    }

    pub fn point(&self, i: usize) -> Point {
        Point::new(0, self.node(i))
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.periods[axis] / self.shape[axis] as f64
    }

    /// Quadrature weight of node i (Riemannian volume).
    pub fn weight(&self, i: usize) -> f64 {
        self.cell * self.sqrt_det[i]
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.sqrt_det).map(|(v, s)| v * s).sum::<f64>() * self.cell
    }

    pub fn inverse_metric(&self, i: usize, a: usize, b: usize) -> f64 {
        if self.flat {
            if a == b {
                1.0
            } else {
                0.0
            }
        } else {
            let n = self.dim();
            self.ginv[i * n * n + a * n + b]
        }
    }

    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.wave[axis]
    }

    /// Coordinate partial derivatives by spectral differentiation.
    pub fn gradient(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let spec = self.spectral.forward(u);
        (0..self.dim()).map(|d| self.spectral.inverse(self.times_ik(&spec, d))).collect()
    }

    /// Sum of coordinate derivatives of the components of `flux`.
    pub fn divergence(&self, flux: &[Vec<f64>]) -> Vec<f64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.spectral.half_len()];
        for (d, f) in flux.iter().enumerate() {
            let s = self.times_ik(&self.spectral.forward(f), d);
            for (a, v) in acc.iter_mut().zip(s) {
                *a += v;
            }
        }
        self.spectral.inverse(acc)
    }

    fn times_ik(&self, spec: &[Complex64], axis: usize) -> Vec<Complex64> {
        let hs = &self.spectral.half_shape;
        let inner: usize = hs[axis + 1..].iter().product();
        let m = hs[axis];
        let w = &self.wave[axis];
        spec.iter()
            .enumerate()
            .map(|(k, c)| {
                let j = (k / inner) % m;
                Complex64::new(-c.im * w[j], c.re * w[j])
            })
            .collect()
    }

    /// Apply a multiplier given on the half spectrum.
    pub fn apply_symbol(&self, u: &[f64], symbol: &[f64]) -> Vec<f64> {
        let mut s = self.spectral.forward(u);
        for (c, m) in s.iter_mut().zip(symbol) {
            *c *= *m;
        }
        self.spectral.inverse(s)
    }

    /// Evaluate a symbol k -> sym(k) with k the angular wave vector.
    pub fn symbol(&self, sym: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let n = self.dim();
        let mut k = vec![0.0; n];
        (0..self.spectral.half_len())
            .map(|flat| {
                let idx = self.spectral.half_index(flat);
                for d in 0..n {
                    k[d] = self.wave[d][idx[d]];
                }
                sym(&k)
            })
            .collect()
    }

    /// sum_d weight_d (pi m_d / T_d)^2 over the axes on which the mode sits at
    /// the Nyquist frequency, zero elsewhere. First derivatives drop these
    /// modes, so second-order operators add this term back.
    pub fn nyquist_symbol(&self, weight: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let nyq: Vec<usize> = (0..n)
            .map(|d| self.spectral.frequencies(d).iter().position(|k| k.abs() as usize == self.shape[d] / 2).unwrap_or(usize::MAX))
            .collect();
        (0..self.spectral.half_len())
            .map(|flat| {
                let idx = self.spectral.half_index(flat);
                (0..n)
                    .filter(|&d| idx[d] == nyq[d])
                    .map(|d| weight[d] * (std::f64::consts::PI * self.shape[d] as f64 / self.periods[d]).powi(2))
                    .sum()
            })
            .collect()
    }

    pub fn descriptor(&self) -> MeshDescriptor {
        MeshDescriptor {
            manifold: self.manifold.describe(),
            periods: self.periods.clone(),
            shape: self.shape.clone(),
            nodes: self.len(),
            flat: self.flat,
            min_spacing: (0..self.dim()).map(|d| self.spacing(d)).fold(f64::INFINITY, f64::min) * self.min_metric_eig.sqrt(),
        }
    }
}

/// Nodal values on a grid.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    pub grid: Arc<PeriodicGrid>,
    pub values: Vec<f64>,
}

impl DiscreteField {
    pub fn new(grid: Arc<PeriodicGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::MeshMismatch);
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<PeriodicGrid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn from_fn(grid: Arc<PeriodicGrid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.node(i))).collect();
        Self { grid, values }
    }

    pub fn same_mesh(&self, other: &DiscreteField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self { grid: self.grid.clone(), values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index and value of the largest entry.
    pub fn argmax(&self) -> (usize, f64) {
        self.values.iter().cloned().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, v)| if v > b.1 { (i, v) } else { b })
    }

    /// CSV with columns x1..xn, value.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let n = self.grid.dim();
        let mut head: Vec<String> = (1..=n).map(|d| format!("x{d}")).collect();
        head.push("value".into());
        wr.write_record(&head)?;
        for (i, v) in self.values.iter().enumerate() {
            let mut row: Vec<String> = self.grid.node(i).iter().map(|x| format!("{x:.10e}")).collect();
            row.push(format!("{v:.15e}"));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}
