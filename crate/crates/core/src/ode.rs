//! Adaptive Dormand-Prince 5(4) integration.
//!
//! Shared by the radial ground-state shooting and the geodesic integrator.
//! The observer hook runs after every accepted step and may rewrite the
//! state in place (chart changes on a manifold) or stop the integration
//! (shooting events).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            initial_step: 1e-3,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

/// What the observer wants after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepControl {
    Continue,
    /// The state was rewritten; derivative caches must be refreshed.
    Modified,
    Stop,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error weights: b - b*
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        let s = h * c;
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += s * ki;
        }
    }
    out
}

/// One Dormand-Prince step. Returns (y_new, f(t+h, y_new), error estimate vector).
pub fn dp45_step<F>(f: &F, t: f64, y: &[f64], k1: &[f64], h: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>)
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(
        t + C5 * h,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        t + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y_new = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(t + h, &y_new);
    let err: Vec<f64> = (0..y.len())
        .map(|i| h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]))
        .collect();
    (y_new, k7, err)
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], opts: &OdeOptions) -> f64 {
    let n = err.len().max(1) as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

/// Integrates y' = f(t, y) from t0 to t1 (t1 > t0). The observer is called
/// after every accepted step with the new time and a mutable state.
/// Returns the final time and state.
pub fn integrate<F, O>(
    f: &F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<(f64, Vec<f64>)>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
    O: FnMut(f64, &mut Vec<f64>) -> StepControl,
{
    let mut t = t0;
    let mut y = y0.to_vec();
    if t1 <= t0 {
        return Ok((t, y));
    }
    let mut h = opts.initial_step.min(t1 - t0).min(opts.max_step);
    let mut k1 = f(t, &y);
    let mut steps = 0usize;
    while t < t1 {
        if steps >= opts.max_steps {
            return Err(Error::NonConvergence {
                what: "ODE integration exceeded step budget".into(),
                iterations: steps,
            });
        }
        steps += 1;
        let last = t + h >= t1;
        let h_try = if last { t1 - t } else { h };
        let (y_new, k_new, err) = dp45_step(f, t, &y, &k1, h_try);
        let en = error_norm(&err, &y, &y_new, opts);
        if !en.is_finite() {
            h = h_try * 0.2;
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::NonConvergence {
                    what: "ODE step size underflow (non-finite state)".into(),
                    iterations: steps,
                });
            }
            continue;
        }
        if en <= 1.0 {
            t = if last { t1 } else { t + h_try };
            y = y_new;
            k1 = k_new;
            match observer(t, &mut y) {
                StepControl::Continue => {}
                StepControl::Modified => k1 = f(t, &y),
                StepControl::Stop => return Ok((t, y)),
            }
            let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h_try * fac).min(opts.max_step);
        } else {
            let fac = (0.9 * en.powf(-0.2)).clamp(0.1, 0.9);
            h = h_try * fac;
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::NonConvergence {
                    what: "ODE step size underflow".into(),
                    iterations: steps,
                });
            }
        }
    }
    Ok((t, y))
}
