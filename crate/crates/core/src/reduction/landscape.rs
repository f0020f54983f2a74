//! Sampling of J~_eps and Gamma over a periodic grid of centers, with
//! critical points located by local quadratic fits.

use super::{gamma, Reduction, ReductionOptions};
use crate::ansatz::EpsSpace;
use crate::error::Result;
use crate::manifold::{distance, Point};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeOptions {
    /// Centers per axis, spread uniformly over the chart periods.
    pub samples: Vec<usize>,
    /// Hessian eigenvalues below this fraction of range / period^2 count as zero.
    pub hessian_floor: f64,
    pub reduction: ReductionOptions,
}

impl Default for LandscapeOptions {
    fn default() -> Self {
        Self { samples: vec![12, 12], hessian_floor: 1e-3, reduction: ReductionOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LandscapeSample {
    pub xi: Vec<f64>,
    pub gamma: f64,
    pub jtilde: f64,
    pub converged: bool,
    pub phi_norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalPoint {
    pub xi: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub hessian_eigenvalues: Vec<f64>,
    pub negative: usize,
    pub positive: usize,
    pub zero: usize,
    /// Nondegenerate Hessian: the C^1-stability surrogate.
    pub stable: bool,
    /// Number of sample nodes merged into this point (more than one for
    /// non-isolated critical sets).
    pub merged: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducedEnergyLandscape {
    pub eps: f64,
    pub shape: Vec<usize>,
    pub samples: Vec<LandscapeSample>,
    pub c_p: f64,
    pub gamma_critical: Vec<CriticalPoint>,
    pub jtilde_critical: Vec<CriticalPoint>,
    /// (index into jtilde_critical, index into gamma_critical, distance).
    pub pairing: Vec<(usize, usize, f64)>,
    /// Gamma is constant: no isolated critical points exist.
    pub degenerate: bool,
}

struct SampleGrid {
    shape: Vec<usize>,
    spacing: Vec<f64>,
}

impl SampleGrid {
    fn len(&self) -> usize {
        self.shape.iter().product()
    }
    fn index(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        for d in (0..idx.len()).rev() {
            idx[d] = k % self.shape[d];
            k /= self.shape[d];
        }
        idx
    }
    fn flat(&self, idx: &[isize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &m)| acc * m + i.rem_euclid(m as isize) as usize)
    }
    fn coords(&self, k: usize) -> Vec<f64> {
        self.index(k).iter().zip(&self.spacing).map(|(&i, h)| i as f64 * h).collect()
    }
}

/// Central-difference gradient and Hessian of periodic samples at node k.
fn local_fit(g: &SampleGrid, f: &[f64], k: usize) -> (DVector<f64>, DMatrix<f64>) {
    let n = g.shape.len();
    let base: Vec<isize> = g.index(k).iter().map(|&i| i as isize).collect();
    let at = |off: &[isize]| {
        let idx: Vec<isize> = base.iter().zip(off).map(|(a, b)| a + b).collect();
        f[g.flat(&idx)]
    };
    let mut grad = DVector::zeros(n);
    let mut hess = DMatrix::zeros(n, n);
    let f0 = f[k];
    for i in 0..n {
        let mut e = vec![0isize; n];
        e[i] = 1;
        let fp = at(&e);
        e[i] = -1;
        let fm = at(&e);
        let h = g.spacing[i];
        grad[i] = (fp - fm) / (2.0 * h);
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in i + 1..n {
            let mut e = vec![0isize; n];
            let mut s = 0.0;
            for (si, sj, w) in [(1, 1, 1.0), (-1, -1, 1.0), (1, -1, -1.0), (-1, 1, -1.0)] {
                e[i] = si;
                e[j] = sj;
                s += w * at(&e);
            }
            let v = s / (4.0 * h * g.spacing[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    (grad, hess)
}

fn critical_points(g: &SampleGrid, f: &[f64], floor: f64) -> Vec<CriticalPoint> {
    let n = g.shape.len();
    let mut cands: Vec<(usize, CriticalPoint)> = Vec::new();
    for k in 0..g.len() {
        let (grad, hess) = local_fit(g, f, k);
        let eig = hess.clone().symmetric_eigen();
        // Newton step restricted to nondegenerate directions
        let mut step = DVector::zeros(n);
        let mut flat_grad: f64 = 0.0;
        for (l, &lam) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(l);
            let gv = v.dot(&grad);
            if lam.abs() > floor {
                step -= v * (gv / lam);
            } else {
                flat_grad = flat_grad.max(gv.abs());
            }
        }
        let inside = (0..n).all(|i| step[i].abs() <= 0.5 * g.spacing[i] + 1e-15);
        // along flat directions the slope must be below what the floor allows over one cell
        let hmin = g.spacing.iter().cloned().fold(f64::INFINITY, f64::min);
        if !inside || flat_grad > floor * hmin {
            continue;
        }
        let x: Vec<f64> = g.coords(k).iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let value = f[k] + grad.dot(&step) + 0.5 * step.dot(&(&hess * &step));
        let ev: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        let negative = ev.iter().filter(|&&l| l < -floor).count();
        let positive = ev.iter().filter(|&&l| l > floor).count();
        let zero = n - negative - positive;
        let residual_grad = grad.clone() + &hess * &step;
        cands.push((
            k,
            CriticalPoint {
                xi: x,
                value,
                gradient_norm: residual_grad.norm(),
                hessian_eigenvalues: ev,
                negative,
                positive,
                zero,
                stable: zero == 0,
                merged: 1,
            },
        ));
    }
    // merge candidates on adjacent nodes (connected components)
    let mut parent: Vec<usize> = (0..cands.len()).collect();
    fn root(p: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for a in 0..cands.len() {
        for b in a + 1..cands.len() {
            let (ia, ib) = (g.index(cands[a].0), g.index(cands[b].0));
            let adjacent = ia.iter().zip(&ib).zip(&g.shape).all(|((x, y), &m)| {
                let d = (*x as isize - *y as isize).rem_euclid(m as isize);
                d <= 1 || d == m as isize - 1
            });
            if adjacent {
                let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..cands.len() {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups
        .values()
        .map(|members| {
            let best = *members
                .iter()
                .min_by(|&&a, &&b| cands[a].1.gradient_norm.total_cmp(&cands[b].1.gradient_norm))
                .unwrap();
            let mut cp = cands[best].1.clone();
            cp.merged = members.len();
            if members.len() > 1 << n {
                // an extended critical set cannot be nondegenerate
                cp.stable = false;
            }
            cp
        })
        .collect()
}

/// Samples J~_eps and Gamma on a periodic grid of centers and locates their
/// critical points. Nodes whose fixed point fails are recorded, not fatal.
pub fn landscape(space: &EpsSpace, opts: &LandscapeOptions) -> Result<ReducedEnergyLandscape> {
    let pr = &space.problem;
    let n = pr.n();
    let periods: Vec<f64> = space.grid.periods.clone();
    let shape = if opts.samples.len() == n { opts.samples.clone() } else { vec![opts.samples.first().copied().unwrap_or(8); n] };
    let g = SampleGrid { spacing: periods.iter().zip(&shape).map(|(t, &m)| t / m as f64).collect(), shape: shape.clone() };
    let c_p = pr.profile.energy_constant();
    let samples: Vec<LandscapeSample> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let xi = g.coords(k);
            let gam = gamma(&pr.coeffs, n, pr.p(), &xi).unwrap_or(f64::NAN);
            let run = Reduction::new(space, &Point::new(0, xi.clone())).and_then(|r| r.fixed_point(&opts.reduction, None));
            match run {
                Ok(st) => LandscapeSample {
                    xi,
                    gamma: gam,
                    jtilde: st.energy,
                    converged: true,
                    phi_norm: st.phi_norm,
                    iterations: st.history.len(),
                },
                Err(_) => LandscapeSample { xi, gamma: gam, jtilde: f64::NAN, converged: false, phi_norm: f64::NAN, iterations: 0 },
            }
        })
        .collect();
    let gv: Vec<f64> = samples.iter().map(|s| s.gamma).collect();
    let jv: Vec<f64> = samples.iter().map(|s| s.jtilde).collect();
    let range = |v: &[f64]| {
        let (lo, hi) = v.iter().filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        (hi - lo, lo.abs().max(hi.abs()))
    };
    let (gr, gs) = range(&gv);
    let degenerate = gr <= 1e-12 * gs.max(1e-300);
    let lmin = periods.iter().cloned().fold(f64::INFINITY, f64::min);
    let (mut gamma_critical, mut jtilde_critical) = (Vec::new(), Vec::new());
    if !degenerate {
        gamma_critical = critical_points(&g, &gv, opts.hessian_floor * gr / (lmin * lmin));
        if jv.iter().all(|x| x.is_finite()) {
            let (jr, _) = range(&jv);
            jtilde_critical = critical_points(&g, &jv, opts.hessian_floor * jr / (lmin * lmin));
        }
    }
    let m = pr.manifold.as_ref();
    let mut pairing = Vec::new();
    for (i, jc) in jtilde_critical.iter().enumerate() {
        let best = gamma_critical
            .iter()
            .enumerate()
            .filter(|(_, gc)| gc.negative == jc.negative && gc.positive == jc.positive)
            .map(|(j, gc)| (j, distance(m, &Point::new(0, jc.xi.clone()), &Point::new(0, gc.xi.clone())).unwrap_or(f64::INFINITY)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((j, d)) = best {
            pairing.push((i, j, d));
        }
    }
    Ok(ReducedEnergyLandscape { eps: space.eps, shape, samples, c_p, gamma_critical, jtilde_critical, pairing, degenerate })
}

impl ReducedEnergyLandscape {
    /// CSV with columns xi_1..xi_n, Gamma, Jtilde, converged, phi_norm, iterations.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let n = self.shape.len();
        let mut head: Vec<String> = (1..=n).map(|d| format!("xi_{d}")).collect();
        head.extend(["Gamma", "Jtilde", "converged", "phi_norm", "iterations"].map(String::from));
        wr.write_record(&head)?;
        for s in &self.samples {
            let mut row: Vec<String> = s.xi.iter().map(|x| format!("{x:.10e}")).collect();
            row.push(format!("{:.15e}", s.gamma));
            row.push(format!("{:.15e}", s.jtilde));
            row.push(s.converged.to_string());
            row.push(format!("{:.6e}", s.phi_norm));
            row.push(s.iterations.to_string());
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}
