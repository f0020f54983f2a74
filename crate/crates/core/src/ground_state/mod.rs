//! Radial ground state of -Delta U + U = U^{p-1} on R^n.
//!
//! The profile is found by shooting on s = U(0) with bisection. The two
//! final bracket shots are integrated node by node on a fixed radial grid
//! and averaged; where they separate, the profile switches to the exact
//! decaying solution of the linearised far-field equation.

mod collocation;
mod io;
mod rescale;

pub use collocation::{collocation_profile, CollocationProfile};
pub use io::ProfileHeader;
pub use rescale::{linearized_kernel, rescale_profile, KernelField, RescaledProfile};

use crate::error::{check_exponent, Error, Result};
use crate::numerics::{gauss_legendre, polyfit, radial_decay, unit_sphere_area};
use crate::ode::{integrate, OdeOptions, StepControl};

/// Truncation radius of the radial problem.
pub const R_MAX: f64 = 30.0;
const DELTA0: f64 = 1e-6;
const MAX_BISECTIONS: usize = 200;
/// End of the innermost cell, where an even polynomial replaces the Hermite interpolant.
const FIRST_NODE: f64 = 0.02;

/// Radial samples of the ground state with a far-field model.
#[derive(Debug, Clone)]
pub struct GroundStateProfile {
    pub n: usize,
    pub p: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub r_max: f64,
    /// Radius beyond which the far-field model replaces the samples.
    pub r_match: f64,
    /// U = tail_amplitude * r^{-nu} K_nu(r) for r > r_match.
    pub tail_amplitude: f64,
    /// Fit of U r^{(n-1)/2} ~ decay_amplitude * exp(-decay_rate r).
    pub decay_amplitude: f64,
    pub decay_rate: f64,
    /// Largest ODE residual found at cell midpoints.
    pub residual_bound: f64,
    /// Even polynomial a0 + a1 r^2 + sum_k b_k (r/r_1)^{2k}, k = 2..4, used on [0, r_1].
    first_cell: [f64; 5],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// U crossed zero: s too large.
    Over,
    /// U turned upward while positive: s too small.
    Under,
}

fn source(p: f64, u: f64) -> f64 {
    u.max(0.0).powf(p - 1.0)
}

fn second_derivative(n: usize, p: f64, r: f64, u: f64, du: f64) -> f64 {
    if r == 0.0 {
        (u - source(p, u)) / n as f64
    } else {
        -(n as f64 - 1.0) / r * du + u - source(p, u)
    }
}

fn rhs(n: usize, p: f64) -> impl Fn(f64, &[f64]) -> Vec<f64> {
    move |r, y| vec![y[1], second_derivative(n, p, r, y[0], y[1])]
}

fn series_start(n: usize, p: f64, s: f64) -> [f64; 2] {
    let c = (s - s.powf(p - 1.0)) / (2.0 * n as f64);
    [s + c * DELTA0 * DELTA0, 2.0 * c * DELTA0]
}

fn ode_options() -> OdeOptions {
    OdeOptions { rtol: 1e-13, atol: 1e-15, initial_step: 1e-4, max_step: 0.05, max_steps: 2_000_000 }
}

fn classify(u: f64, du: f64) -> Option<Shot> {
    if u < 0.0 {
        Some(Shot::Over)
    } else if du > 0.0 {
        Some(Shot::Under)
    } else {
        None
    }
}

fn shoot(n: usize, p: f64, s: f64) -> Result<Shot> {
    let f = rhs(n, p);
    let mut outcome = None;
    let (_, y) = integrate(&f, DELTA0, &series_start(n, p, s), R_MAX, &ode_options(), |_, y| {
        outcome = classify(y[0], y[1]);
        if outcome.is_some() {
            StepControl::Stop
        } else {
            StepControl::Continue
        }
    })?;
    Ok(outcome.unwrap_or(if y[0] + y[1] < 0.0 { Shot::Over } else { Shot::Under }))
}

/// Brackets and bisects the shooting parameter. Returns (lo, hi) with
/// lo undershooting and hi overshooting.
fn bisect(n: usize, p: f64) -> Result<(f64, f64)> {
    // s <= 1 never decays (s = 1 is the constant equilibrium).
    let mut lo = 1.0;
    let mut hi = 2.0;
    let mut grown = 0;
    while shoot(n, p, hi)? != Shot::Over {
        lo = hi;
        hi *= 2.0;
        grown += 1;
        if grown > 20 {
            return Err(Error::BracketNotFound(format!(
                "no overshooting amplitude found up to {hi} for n = {n}, p = {p}"
            )));
        }
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok((lo, hi));
        }
        match shoot(n, p, mid)? {
            Shot::Over => hi = mid,
            Shot::Under => lo = mid,
        }
    }
    Err(Error::NonConvergence { what: "ground-state bisection".into(), iterations: MAX_BISECTIONS })
}

fn radial_grid(h_uniform: f64) -> Vec<f64> {
    let mut r = vec![0.0, FIRST_NODE];
    while *r.last().unwrap() < R_MAX {
        let last = *r.last().unwrap();
        r.push((last + h_uniform).min(R_MAX));
    }
    r
}

/// Integrates one shot node by node; returns values up to the node where an
/// event fired (exclusive).
fn shot_on_grid(n: usize, p: f64, s: f64, grid: &[f64]) -> Result<Vec<[f64; 2]>> {
    let f = rhs(n, p);
    let opts = ode_options();
    let mut out = vec![[s, 0.0]];
    let mut y = series_start(n, p, s).to_vec();
    let mut t = DELTA0;
    for &r1 in &grid[1..] {
        let mut hit = false;
        let (_, y1) = integrate(&f, t, &y, r1, &opts, |_, y| {
            hit = classify(y[0], y[1]).is_some();
            if hit {
                StepControl::Stop
            } else {
                StepControl::Continue
            }
        })?;
        if hit {
            break;
        }
        out.push([y1[0], y1[1]]);
        y = y1;
        t = r1;
    }
    Ok(out)
}

/// Quintic Hermite interpolation on one cell; returns (value, first, second derivative).
fn hermite5(r0: f64, r1: f64, a: [f64; 3], b: [f64; 3], r: f64) -> [f64; 3] {
    let h = r1 - r0;
    let t = (r - r0) / h;
    let (t2, t3, t4, t5) = (t * t, t * t * t, t.powi(4), t.powi(5));
    let h0 = [1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5, -30.0 * t2 + 60.0 * t3 - 30.0 * t4, -60.0 * t + 180.0 * t2 - 120.0 * t3];
    let h1 = [t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5, 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4, -36.0 * t + 96.0 * t2 - 60.0 * t3];
    let h2 = [
        0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5,
        t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4,
        1.0 - 9.0 * t + 18.0 * t2 - 10.0 * t3,
    ];
    let h3 = [10.0 * t3 - 15.0 * t4 + 6.0 * t5, 30.0 * t2 - 60.0 * t3 + 30.0 * t4, 60.0 * t - 180.0 * t2 + 120.0 * t3];
    let h4 = [-4.0 * t3 + 7.0 * t4 - 3.0 * t5, -12.0 * t2 + 28.0 * t3 - 15.0 * t4, -24.0 * t + 84.0 * t2 - 60.0 * t3];
    let h5 = [0.5 * t3 - t4 + 0.5 * t5, 1.5 * t2 - 4.0 * t3 + 2.5 * t4, 3.0 * t - 12.0 * t2 + 10.0 * t3];
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let v = a[0] * h0[k] + h * a[1] * h1[k] + h * h * a[2] * h2[k] + b[0] * h3[k] + h * b[1] * h4[k] + h * h * b[2] * h5[k];
        *o = v / h.powi(k as i32);
    }
    out
}

impl GroundStateProfile {
    /// Builds a profile from node samples (r_j, U_j, U'_j) with r_0 = 0.
    pub(crate) fn from_samples(n: usize, p: f64, r: Vec<f64>, u: Vec<f64>, du: Vec<f64>, r_match: f64) -> Self {
        let (w, _) = radial_decay(n, r_match);
        let last = r.partition_point(|&x| x <= r_match * (1.0 + 1e-14)) - 1;
        let tail_amplitude = u[last] / w;
        let mut prof = Self {
            n,
            p,
            r,
            u,
            du,
            r_max: R_MAX,
            r_match,
            tail_amplitude,
            decay_amplitude: 0.0,
            decay_rate: 0.0,
            residual_bound: 0.0,
            first_cell: [0.0; 5],
        };
        prof.fit_first_cell();
        prof.fit_decay();
        prof.residual_bound = prof.midpoint_residual();
        prof
    }

    /// U is even in r; near the origin an even polynomial matching U(0),
    /// U''(0) and (U, U', U'') at r_1 avoids the 1/r amplification of nodal
    /// derivative errors.
    fn fit_first_cell(&mut self) {
        let r1 = self.r[1];
        let a0 = self.u[0];
        let a1 = 0.5 * second_derivative(self.n, self.p, 0.0, a0, 0.0);
        let [u1, d1, s1] = self.node_data(1);
        let m = nalgebra::Matrix3::new(1.0, 1.0, 1.0, 4.0, 6.0, 8.0, 12.0, 30.0, 56.0);
        let rhs = nalgebra::Vector3::new(
            u1 - a0 - a1 * r1 * r1,
            r1 * d1 - 2.0 * a1 * r1 * r1,
            r1 * r1 * s1 - 2.0 * a1 * r1 * r1,
        );
        let b = m.lu().solve(&rhs).expect("fixed nonsingular matrix");
        self.first_cell = [a0, a1, b[0], b[1], b[2]];
    }

    fn eval_first_cell(&self, r: f64) -> [f64; 3] {
        let r1 = self.r[1];
        let [a0, a1, b2, b3, b4] = self.first_cell;
        let t = r / r1;
        let t2 = t * t;
        let v = a0 + a1 * r * r + t2 * t2 * (b2 + t2 * (b3 + t2 * b4));
        let d = 2.0 * a1 * r + t2 * t * (4.0 * b2 + t2 * (6.0 * b3 + t2 * 8.0 * b4)) / r1;
        let s = 2.0 * a1 + t2 * (12.0 * b2 + t2 * (30.0 * b3 + t2 * 56.0 * b4)) / (r1 * r1);
        [v, d, s]
    }

    /// U(0).
    pub fn peak(&self) -> f64 {
        self.u[0]
    }

    fn node_data(&self, j: usize) -> [f64; 3] {
        [self.u[j], self.du[j], second_derivative(self.n, self.p, self.r[j], self.u[j], self.du[j])]
    }

    /// (U, U', U'') at radius r >= 0.
    pub fn eval(&self, r: f64) -> [f64; 3] {
        let r = r.abs();
        if r > self.r_match {
            let (w, dw) = radial_decay(self.n, r);
            let c = self.tail_amplitude;
            // U'' from the linear far-field equation
            let d2 = c * w - (self.n as f64 - 1.0) / r * c * dw;
            return [c * w, c * dw, d2];
        }
        let j = self.r.partition_point(|&x| x <= r).clamp(1, self.r.len() - 1) - 1;
        if j == 0 {
            return self.eval_first_cell(r);
        }
        hermite5(self.r[j], self.r[j + 1], self.node_data(j), self.node_data(j + 1), r)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r)[0]
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.eval(r)[1]
    }

    /// Radial ODE residual U'' + (n-1)/r U' - U + U^{p-1} of the interpolant.
    pub fn ode_residual(&self, r: f64) -> f64 {
        let [u, du, d2] = self.eval(r);
        let lap = if r == 0.0 { self.n as f64 * d2 } else { d2 + (self.n as f64 - 1.0) / r * du };
        lap - u + source(self.p, u)
    }

    fn midpoint_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.r.len() - 1 {
            if self.r[j] >= self.r_match {
                break;
            }
            let m = 0.5 * (self.r[j] + self.r[j + 1]);
            worst = worst.max(self.ode_residual(m).abs());
        }
        worst
    }

    fn fit_decay(&mut self) {
        let lo = 0.5 * self.r_match;
        let pts: Vec<f64> = (0..=40).map(|k| lo + (self.r_match - lo) * k as f64 / 40.0).collect();
        let y: Vec<f64> = pts
            .iter()
            .map(|&r| (self.value(r) * r.powf((self.n as f64 - 1.0) / 2.0)).ln())
            .collect();
        let c = polyfit(&pts, &y, 1);
        self.decay_amplitude = c[0].exp();
        self.decay_rate = -c[1];
    }

    /// Integral of U^q over R^n and an estimate of its relative quadrature error.
    pub fn moment_with_error(&self, q: f64) -> Result<(f64, f64)> {
        if !(q > 0.0) {
            return Err(Error::InvalidParameter(format!("moment exponent q = {q} must be positive")));
        }
        let n = self.n;
        let integrand = |r: f64| self.value(r).max(0.0).powf(q) * r.powi(n as i32 - 1);
        let rules = [gauss_legendre(6), gauss_legendre(4)];
        let mut sums = [0.0; 2];
        let mut cells: Vec<(f64, f64)> = Vec::new();
        for j in 0..self.r.len() - 1 {
            if self.r[j] >= self.r_match {
                break;
            }
            cells.push((self.r[j], self.r[j + 1].min(self.r_match)));
        }
        let tail_end = self.r_match + 60.0 / q;
        let panels = ((tail_end - self.r_match) / 0.25).ceil() as usize;
        let h = (tail_end - self.r_match) / panels as f64;
        cells.extend((0..panels).map(|k| (self.r_match + k as f64 * h, self.r_match + (k + 1) as f64 * h)));
        for (k, (x, w)) in rules.iter().enumerate() {
            for &(a, b) in &cells {
                let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                sums[k] += half * x.iter().zip(w).map(|(xi, wi)| wi * integrand(mid + half * xi)).sum::<f64>();
            }
        }
        let area = unit_sphere_area(n);
        let err = ((sums[0] - sums[1]) / sums[0]).abs();
        Ok((area * sums[0], err))
    }

    /// Integral of U^q over R^n.
    pub fn moment(&self, q: f64) -> Result<f64> {
        Ok(self.moment_with_error(q)?.0)
    }

    /// Integral of |grad U|^2 over R^n.
    pub fn gradient_energy(&self) -> f64 {
        let n = self.n as i32;
        let end = self.r_match + 60.0;
        let panels = (end / 0.02).ceil() as usize;
        unit_sphere_area(self.n)
            * crate::numerics::integrate_gl(|r| self.derivative(r).powi(2) * r.powi(n - 1), 0.0, end, panels, 6)
    }

    /// C_p = (p-2)/(2p) * integral of U^p.
    pub fn energy_constant(&self) -> f64 {
        (self.p - 2.0) / (2.0 * self.p) * self.moment(self.p).expect("p > 2")
    }
}

/// Solves the radial limit problem; the midpoint ODE residual of the
/// returned interpolant is at most `tol` where achievable on the finest grid.
pub fn solve_ground_state(n: usize, p: f64, tol: f64) -> Result<GroundStateProfile> {
    check_exponent(n, p)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    let (lo, hi) = bisect(n, p)?;
    let mut h = 0.01;
    loop {
        let grid = radial_grid(h);
        let a = shot_on_grid(n, p, lo, &grid)?;
        let b = shot_on_grid(n, p, hi, &grid)?;
        let m = a.len().min(b.len());
        let mut r = Vec::with_capacity(m);
        let mut u = Vec::with_capacity(m);
        let mut du = Vec::with_capacity(m);
        for j in 0..m {
            let v = 0.5 * (a[j][0] + b[j][0]);
            if j > 0 && (a[j][0] - b[j][0]).abs() > 1e-6 * v {
                break;
            }
            r.push(grid[j]);
            u.push(v);
            du.push(0.5 * (a[j][1] + b[j][1]));
        }
        let r_match = *r.last().unwrap();
        let prof = GroundStateProfile::from_samples(n, p, r, u, du, r_match);
        if prof.residual_bound <= tol || h < 2e-3 {
            return Ok(prof);
        }
        h *= 0.5;
    }
}

/// Convenience alias used by the reduction: integral of U^q.
pub fn profile_moment(profile: &GroundStateProfile, q: f64) -> Result<f64> {
    profile.moment(q)
}

pub fn energy_constant(profile: &GroundStateProfile) -> f64 {
    profile.energy_constant()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soliton_p4_closed_form() {
        let g = solve_ground_state(1, 4.0, 1e-10).unwrap();
        assert!((g.peak() - 2f64.sqrt()).abs() < 1e-8, "{}", g.peak());
        for x in [0.3f64, 1.0, 2.5, 6.0, 12.0, 20.0] {
            let exact = 2f64.sqrt() / x.cosh();
            assert!((g.value(x) - exact).abs() < 1e-9, "x = {x}");
        }
        assert!((g.moment(4.0).unwrap() - 16.0 / 3.0).abs() < 1e-8);
        assert!((g.moment(2.0).unwrap() - 4.0).abs() < 1e-8);
        // (p-2)/(2p) * 16/3 with p = 4
        assert!((g.energy_constant() - 4.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn soliton_p3_closed_form() {
        let g = solve_ground_state(1, 3.0, 1e-10).unwrap();
        assert!((g.peak() - 1.5).abs() < 1e-8);
        assert!((g.energy_constant() - 1.2).abs() < 1e-8);
    }

    #[test]
    fn supercritical_exponent_is_rejected() {
        assert!(matches!(solve_ground_state(3, 7.0, 1e-8), Err(Error::InadmissibleExponent { .. })));
        assert!(solve_ground_state(2, 2.0, 1e-8).is_err());
    }

    #[test]
    fn profile_invariants_2d() {
        let g = solve_ground_state(2, 4.0, 1e-10).unwrap();
        assert!(g.residual_bound <= 1e-10, "{}", g.residual_bound);
        assert!(g.du[0] == 0.0);
        for w in g.u.windows(2) {
            assert!(w[1] < w[0] && w[1] > 0.0);
        }
        assert!((g.decay_rate - 1.0).abs() < 0.01, "rate {}", g.decay_rate);
        let (_, err) = g.moment_with_error(4.0).unwrap();
        assert!(err < 1e-8);
        // Pohozaev-type identity from testing the equation with U
        let lhs = g.gradient_energy() + g.moment(2.0).unwrap();
        let rhs = g.moment(4.0).unwrap();
        assert!(((lhs - rhs) / rhs).abs() < 1e-6);
    }

    #[test]
    fn hermite_reproduces_quintics() {
        let f = |x: f64| [x.powi(5) - 2.0 * x * x, 5.0 * x.powi(4) - 4.0 * x, 20.0 * x.powi(3) - 4.0];
        let v = hermite5(0.5, 0.9, f(0.5), f(0.9), 0.73);
        let e = f(0.73);
        for k in 0..3 {
            assert!((v[k] - e[k]).abs() < 1e-12);
        }
    }
}
