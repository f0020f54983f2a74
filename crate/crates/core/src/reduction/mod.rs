//! Lyapunov-Schmidt reduction: i*, the remainder R, the linearization L,
//! the nonlinear term N, the fixed point phi and the reduced energy.

mod landscape;

pub use landscape::{landscape, CriticalPoint, LandscapeOptions, LandscapeSample, ReducedEnergyLandscape};

use crate::ansatz::{EpsSpace, PeakAnsatz};
use crate::coeffs::{gamma_functional, CoefficientField};
use crate::error::{Error, Result};
use crate::linsolve::{dot, minres, SolveStats};
use crate::manifold::Point;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

/// Gamma(x) = c^{n/2} a^{p/(p-2) - n/2} / b^{2/(p-2)}.
pub fn gamma(coeffs: &CoefficientField, n: usize, p: f64, xi: &[f64]) -> Result<f64> {
    Ok(gamma_functional(coeffs.positive_at(xi)?, n, p))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionOptions {
    /// Stop when |phi_{k+1} - phi_k|_eps < tol.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest admissible ratio of successive steps.
    pub contraction_guard: f64,
    pub eps0: f64,
    /// Relative residual for each saddle-point solve.
    pub linear_tol: f64,
    /// Lanczos steps for the smallest singular value of L (0 disables).
    pub sigma_steps: usize,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 40, contraction_guard: 0.95, eps0: 0.25, linear_tol: 1e-10, sigma_steps: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub step_norm: f64,
    pub phi_norm: f64,
    pub contraction: Option<f64>,
    pub linear_iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionState {
    pub eps: f64,
    pub xi: Vec<f64>,
    #[serde(skip)]
    pub phi: Vec<f64>,
    pub phi_norm: f64,
    pub max_phi_norm: f64,
    pub remainder_norm: f64,
    pub history: Vec<IterationRecord>,
    pub max_contraction: f64,
    /// |Pi^perp{W + phi - i*[b f(W + phi)]}|_eps
    pub residual: f64,
    pub orthogonality_defect: f64,
    pub gram_condition: f64,
    pub sigma_min: Option<f64>,
    /// J_eps(W + phi)
    pub energy: f64,
    /// J_eps(W)
    pub ansatz_energy: f64,
}

/// Operators of the reduction at fixed (eps, xi).
pub struct Reduction<'a> {
    pub space: &'a EpsSpace,
    pub ansatz: PeakAnsatz,
    fw: Vec<f64>,
    /// b sqrt(g) f'(W)
    bdf: Vec<f64>,
    aw: Vec<f64>,
    schur_inv: DMatrix<f64>,
}

impl<'a> Reduction<'a> {
    pub fn new(space: &'a EpsSpace, xi: &Point) -> Result<Self> {
        let ansatz = PeakAnsatz::new(space, xi)?;
        Ok(Self::from_ansatz(space, ansatz))
    }

    pub fn from_ansatz(space: &'a EpsSpace, ansatz: PeakAnsatz) -> Self {
        let pr = &space.problem;
        let fw: Vec<f64> = ansatz.w.iter().map(|&w| pr.f(w)).collect();
        let bdf: Vec<f64> = ansatz.w.iter().zip(space.b_weights()).map(|(&w, bw)| bw * pr.df(w)).collect();
        let aw = space.apply_a(&ansatz.w);
        let n = ansatz.n();
        let pz: Vec<Vec<f64>> = ansatz.az.iter().map(|v| space.precondition(v)).collect();
        let schur = DMatrix::from_fn(n, n, |h, k| dot(&ansatz.az[h], &pz[k]));
        let schur = (&schur + schur.transpose()) * 0.5;
        let schur_inv = schur.try_inverse().unwrap_or_else(|| DMatrix::identity(n, n));
        Self { space, ansatz, fw, bdf, aw, schur_inv }
    }

    pub fn w(&self) -> &[f64] {
        &self.ansatz.w
    }

    /// i*[b v]
    pub fn istar_b(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.space.solve_a(&self.space.load_b(v))?.0)
    }

    /// R = Pi^perp{i*[b f(W)] - W}
    pub fn remainder(&self) -> Result<(Vec<f64>, f64)> {
        let u = self.istar_b(&self.fw)?;
        let d: Vec<f64> = u.iter().zip(self.w()).map(|(a, b)| a - b).collect();
        let r = self.ansatz.project_orthogonal(&d);
        let nrm = self.space.norm(&r);
        Ok((r, nrm))
    }

    /// L(phi) = Pi^perp{phi - i*[b f'(W) phi]}
    pub fn apply_l(&self, phi: &[f64]) -> Result<Vec<f64>> {
        let bphi: Vec<f64> = phi.iter().zip(&self.bdf).map(|(x, d)| x * d).collect();
        let u = self.space.solve_a(&bphi)?.0;
        let d: Vec<f64> = phi.iter().zip(&u).map(|(a, b)| a - b).collect();
        Ok(self.ansatz.project_orthogonal(&d))
    }

    /// N(phi) = Pi^perp i*[b(f(W + phi) - f(W) - f'(W) phi)]
    pub fn nonlinear(&self, phi: &[f64]) -> Result<Vec<f64>> {
        let pr = &self.space.problem;
        let bw = self.space.b_weights();
        let rhs: Vec<f64> = (0..phi.len())
            .map(|k| {
                let w = self.ansatz.w[k];
                bw[k] * (pr.f(w + phi[k]) - self.fw[k]) - self.bdf[k] * phi[k]
            })
            .collect();
        let u = self.space.solve_a(&rhs)?.0;
        Ok(self.ansatz.project_orthogonal(&u))
    }

    /// Solve [A - B, AZ; AZ^T, 0] [phi; mu] = [top; 0].
    pub fn solve_saddle(&self, top: &[f64], tol: f64) -> Result<(Vec<f64>, SolveStats)> {
        let len = top.len();
        let n = self.ansatz.n();
        let az = &self.ansatz.az;
        let apply = |x: &[f64]| -> Vec<f64> {
            let (phi, mu) = x.split_at(len);
            let mut out = self.space.apply_a(phi);
            for k in 0..len {
                out[k] -= self.bdf[k] * phi[k];
            }
            for h in 0..n {
                for k in 0..len {
                    out[k] += mu[h] * az[h][k];
                }
            }
            for h in 0..n {
                out.push(dot(&az[h], phi));
            }
            out
        };
        let precond = |r: &[f64]| -> Vec<f64> {
            let (top, bot) = r.split_at(len);
            let mut out = self.space.precondition(top);
            let m = &self.schur_inv * DVector::from_column_slice(bot);
            out.extend(m.iter());
            out
        };
        let mut rhs = top.to_vec();
        rhs.extend(std::iter::repeat(0.0).take(n));
        let (mut x, st) = minres(&apply, &precond, &rhs, tol, 3000)?;
        x.truncate(len);
        Ok((x, st))
    }

    /// L^{-1} h for h in K^perp (h is projected first).
    pub fn solve_l(&self, h: &[f64], tol: f64) -> Result<(Vec<f64>, SolveStats)> {
        let ph = self.ansatz.project_orthogonal(h);
        self.solve_saddle(&self.space.apply_a(&ph), tol)
    }

    /// |Pi^perp{W + phi - i*[b f(W + phi)]}|_eps
    pub fn red1_residual(&self, phi: &[f64]) -> Result<f64> {
        let pr = &self.space.problem;
        let u: Vec<f64> = self.w().iter().zip(phi).map(|(a, b)| a + b).collect();
        let fu: Vec<f64> = u.iter().map(|&x| pr.f(x)).collect();
        let is = self.istar_b(&fu)?;
        let d: Vec<f64> = u.iter().zip(&is).map(|(a, b)| a - b).collect();
        Ok(self.space.norm(&self.ansatz.project_orthogonal(&d)))
    }

    /// Smallest singular value of L on K^perp from Lanczos on L^{-1}
    /// (L is self-adjoint in the eps product there).
    pub fn sigma_min(&self, steps: usize, seed: u64, tol: f64) -> Result<f64> {
        let len = self.w().len();
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let start: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut q = self.ansatz.project_orthogonal(&start);
        let nq = self.space.norm(&q);
        q.iter_mut().for_each(|v| *v /= nq);
        let mut basis: Vec<Vec<f64>> = vec![q];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..steps {
            let (mut v, _) = self.solve_l(&basis[j], tol)?;
            v = self.ansatz.project_orthogonal(&v);
            let av = self.space.apply_a(&v);
            let a = self.space.quad_scale * dot(&av, &basis[j]);
            alpha.push(a);
            // full reorthogonalization in the eps product
            for _ in 0..2 {
                for b in &basis {
                    let c = self.space.inner(&v, b);
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let bn = self.space.norm(&v);
            if j + 1 == steps || bn < 1e-12 {
                break;
            }
            beta.push(bn);
            v.iter_mut().for_each(|x| *x /= bn);
            basis.push(v);
        }
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let ev = t.symmetric_eigenvalues();
        let big = ev.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
        Ok(1.0 / big)
    }

    /// phi_{k+1} = L^{-1}(N(phi_k) + R) from phi_0, each step one saddle solve.
    pub fn fixed_point(&self, opts: &ReductionOptions, phi0: Option<Vec<f64>>) -> Result<ReductionState> {
        let sp = self.space;
        if sp.eps > opts.eps0 {
            return Err(Error::InvalidParameter(format!("eps = {} exceeds eps0 = {}", sp.eps, opts.eps0)));
        }
        let pr = &sp.problem;
        let len = self.w().len();
        let bw = sp.b_weights();
        let (_, remainder_norm) = self.remainder()?;
        let mut phi = match phi0 {
            Some(p) => self.ansatz.project_orthogonal(&p),
            None => vec![0.0; len],
        };
        let mut history: Vec<IterationRecord> = Vec::new();
        let mut max_phi = sp.norm(&phi);
        let mut max_contraction: f64 = 0.0;
        let mut converged = false;
        for it in 0..opts.max_iter {
            let top: Vec<f64> = (0..len)
                .map(|k| bw[k] * pr.f(self.ansatz.w[k] + phi[k]) - self.bdf[k] * phi[k] - self.aw[k])
                .collect();
            let (next, st) = self.solve_saddle(&top, opts.linear_tol)?;
            let diff: Vec<f64> = next.iter().zip(&phi).map(|(a, b)| a - b).collect();
            let step = sp.norm(&diff);
            let contraction = history.last().and_then(|h| if h.step_norm > 0.0 { Some(step / h.step_norm) } else { None });
            phi = next;
            let phi_norm = sp.norm(&phi);
            max_phi = max_phi.max(phi_norm);
            history.push(IterationRecord { step_norm: step, phi_norm, contraction, linear_iterations: st.iterations });
            if step < opts.tol {
                converged = true;
                break;
            }
            if let Some(q) = contraction {
                max_contraction = max_contraction.max(q);
                if q > opts.contraction_guard {
                    return Err(Error::NoContraction { ratio: q, iteration: it });
                }
            }
        }
        if !converged {
            return Err(Error::NonConvergence { what: "fixed point for phi".into(), iterations: opts.max_iter });
        }
        let phi_norm = sp.norm(&phi);
        let residual = self.red1_residual(&phi)?;
        let orthogonality_defect = self.ansatz.orthogonality_defect(&phi, phi_norm);
        let sigma_min = if opts.sigma_steps > 0 { Some(self.sigma_min(opts.sigma_steps, 7, opts.linear_tol)?) } else { None };
        let u: Vec<f64> = self.w().iter().zip(&phi).map(|(a, b)| a + b).collect();
        Ok(ReductionState {
            eps: sp.eps,
            xi: self.ansatz.xi.x.clone(),
            energy: sp.energy(&u),
            ansatz_energy: sp.energy(self.w()),
            phi,
            phi_norm,
            max_phi_norm: max_phi,
            remainder_norm,
            history,
            max_contraction,
            residual,
            orthogonality_defect,
            gram_condition: self.ansatz.gram_condition,
            sigma_min,
        })
    }
}

/// Fixed point phi_{eps,xi} on the given space.
pub fn fixed_point_phi(space: &EpsSpace, xi: &Point, opts: &ReductionOptions) -> Result<ReductionState> {
    Reduction::new(space, xi)?.fixed_point(opts, None)
}

/// J~_eps(xi) = J_eps(W + phi).
pub fn reduced_energy(space: &EpsSpace, xi: &Point, opts: &ReductionOptions) -> Result<f64> {
    Ok(fixed_point_phi(space, xi, opts)?.energy)
}
