//! Multidimensional real FFT on a row-major periodic grid: real transform
//! along the last (contiguous) axis, complex transforms along the others.

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Clone)]
pub struct Spectral {
    pub shape: Vec<usize>,
    /// Shape of the half spectrum: last axis has L/2 + 1 entries.
    pub half_shape: Vec<usize>,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Spectral({:?})", self.shape)
    }
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for d in (0..shape.len().saturating_sub(1)).rev() {
        s[d] = s[d + 1] * shape[d + 1];
    }
    s
}

impl Spectral {
    pub fn new(shape: &[usize]) -> Self {
        let n = shape.len();
        let last = shape[n - 1];
        let mut rp = RealFftPlanner::<f64>::new();
        let mut cp = FftPlanner::<f64>::new();
        let mut half_shape = shape.to_vec();
        half_shape[n - 1] = last / 2 + 1;
        Self {
            shape: shape.to_vec(),
            half_shape,
            r2c: rp.plan_fft_forward(last),
            c2r: rp.plan_fft_inverse(last),
            forward: shape[..n - 1].iter().map(|&m| cp.plan_fft_forward(m)).collect(),
            inverse: shape[..n - 1].iter().map(|&m| cp.plan_fft_inverse(m)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn half_len(&self) -> usize {
        self.half_shape.iter().product()
    }

    fn along_axis(&self, data: &mut [Complex64], axis: usize, plan: &Arc<dyn Fft<f64>>) {
        let st = strides(&self.half_shape);
        let m = self.half_shape[axis];
        let stride = st[axis];
        let block = stride * m;
        let mut line = vec![Complex64::new(0.0, 0.0); m];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for outer in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (j, l) in line.iter_mut().enumerate() {
                    *l = data[base + j * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (j, l) in line.iter().enumerate() {
                    data[base + j * stride] = *l;
                }
            }
        }
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, u: &[f64]) -> Vec<Complex64> {
        let last = *self.shape.last().unwrap();
        let h = last / 2 + 1;
        let rows = u.len() / last;
        let mut out = vec![Complex64::new(0.0, 0.0); rows * h];
        let mut input = vec![0.0; last];
        let mut scratch = self.r2c.make_scratch_vec();
        for r in 0..rows {
            input.copy_from_slice(&u[r * last..(r + 1) * last]);
            self.r2c
                .process_with_scratch(&mut input, &mut out[r * h..(r + 1) * h], &mut scratch)
                .expect("buffer sizes match the plan");
        }
        for (axis, plan) in self.forward.iter().enumerate() {
            self.along_axis(&mut out, axis, plan);
        }
        out
    }

    /// Normalized inverse transform (consumes the spectrum).
    pub fn inverse(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        for (axis, plan) in self.inverse.iter().enumerate() {
            self.along_axis(&mut spec, axis, plan);
        }
        let last = *self.shape.last().unwrap();
        let h = last / 2 + 1;
        let rows = spec.len() / h;
        let scale = 1.0 / self.len() as f64;
        let mut out = vec![0.0; rows * last];
        let mut scratch = self.c2r.make_scratch_vec();
        for r in 0..rows {
            let row = &mut spec[r * h..(r + 1) * h];
            row[0].im = 0.0;
            if last % 2 == 0 {
                row[h - 1].im = 0.0;
            }
            self.c2r
                .process_with_scratch(row, &mut out[r * last..(r + 1) * last], &mut scratch)
                .expect("buffer sizes match the plan");
        }
        for v in &mut out {
            *v *= scale;
        }
        out
    }

    /// Integer frequency of each half-spectrum index along `axis`.
    pub fn frequencies(&self, axis: usize) -> Vec<f64> {
        let m = self.shape[axis];
        (0..self.half_shape[axis])
            .map(|j| if j <= m / 2 { j as f64 } else { j as f64 - m as f64 })
            .collect()
    }

    /// Multi-index of a half-spectrum entry.
    pub fn half_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.half_shape.len()];
        for d in (0..idx.len()).rev() {
            idx[d] = flat % self.half_shape[d];
            flat /= self.half_shape[d];
        }
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_single_mode() {
        let shape = [6usize, 8];
        let sp = Spectral::new(&shape);
        let u: Vec<f64> = (0..48).map(|i| ((i * 7 % 11) as f64).sin()).collect();
        let back = sp.inverse(sp.forward(&u));
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
        // cos(2 pi (x0 / 6 + 3 x1 / 8)) puts all energy in frequencies (1, 3)
        let w: Vec<f64> = (0..48)
            .map(|i| (std::f64::consts::TAU * ((i / 8) as f64 / 6.0 + 3.0 * (i % 8) as f64 / 8.0)).cos())
            .collect();
        let s = sp.forward(&w);
        let (f0, f1) = (sp.frequencies(0), sp.frequencies(1));
        for (k, c) in s.iter().enumerate() {
            let idx = sp.half_index(k);
            let expect = if f0[idx[0]] == 1.0 && f1[idx[1]] == 3.0 { 24.0 } else { 0.0 };
            assert!((c.norm() - expect).abs() < 1e-10, "{idx:?} {c}");
        }
    }

    #[test]
    fn one_dimensional() {
        let sp = Spectral::new(&[16]);
        let u: Vec<f64> = (0..16).map(|i| (i as f64 * 0.3).cos() + 0.1 * i as f64).collect();
        let back = sp.inverse(sp.forward(&u));
        assert!(u.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-13));
    }
}
