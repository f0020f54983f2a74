use super::DiscreteField;
use rustfft::num_complex::Complex64;

/// Trigonometric interpolant of a nodal field. Nyquist modes enter as
/// cosines so the interpolant is real and reproduces the nodal values.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    periods: Vec<f64>,
    /// (wave vector, per-axis Nyquist flags, weighted coefficient)
    modes: Vec<(Vec<f64>, Vec<bool>, Complex64)>,
}

impl TrigInterpolant {
    pub fn new(u: &DiscreteField) -> Self {
        let g = &u.grid;
        let n = g.dim();
        let sp = &g.spectral;
        let spec = sp.forward(&u.values);
        let freqs: Vec<Vec<f64>> = (0..n).map(|d| sp.frequencies(d)).collect();
        let scale = 1.0 / g.len() as f64;
        let last = n - 1;
        let modes = spec
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(flat, c)| {
                let idx = sp.half_index(flat);
                let nyq: Vec<bool> = (0..n).map(|d| freqs[d][idx[d]].abs() as usize * 2 == g.shape[d]).collect();
                let k: Vec<f64> = (0..n).map(|d| std::f64::consts::TAU * freqs[d][idx[d]] / g.periods[d]).collect();
                let w = if idx[last] == 0 || nyq[last] { 1.0 } else { 2.0 };
                (k, nyq, c * (w * scale))
            })
            .collect();
        Self { periods: g.periods.clone(), modes }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.modes
            .iter()
            .map(|(k, nyq, c)| {
                let mut z = *c;
                for d in 0..k.len() {
                    let t = k[d] * x[d];
                    z *= if nyq[d] { Complex64::new(t.cos(), 0.0) } else { Complex64::new(t.cos(), t.sin()) };
                }
                z.re
            })
            .sum()
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }
}
