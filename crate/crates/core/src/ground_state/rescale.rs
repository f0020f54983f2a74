//! Rescaled profiles V(z) = gamma U(sqrt(A) |z|) and the kernel fields psi^i.

use super::GroundStateProfile;
use crate::coeffs::{CoeffValues, CoefficientField};
use crate::error::{Error, Result};
use std::sync::Arc;

/// The limit profile frozen at a point xi.
#[derive(Debug, Clone)]
pub struct RescaledProfile {
    pub profile: Arc<GroundStateProfile>,
    pub xi: Vec<f64>,
    pub coeffs: CoeffValues,
    pub big_a: f64,
    pub big_b: f64,
    pub gamma: f64,
}

pub fn rescale_profile(
    profile: Arc<GroundStateProfile>,
    coeffs: &CoefficientField,
    xi: &[f64],
) -> Result<RescaledProfile> {
    let v = coeffs.positive_at(xi)?;
    Ok(RescaledProfile::from_values(profile, xi.to_vec(), v))
}

impl RescaledProfile {
    pub fn from_values(profile: Arc<GroundStateProfile>, xi: Vec<f64>, v: CoeffValues) -> Self {
        let gamma = v.gamma(profile.p);
        Self { big_a: v.big_a(), big_b: v.big_b(), gamma, coeffs: v, xi, profile }
    }

    pub fn dim(&self) -> usize {
        self.profile.n
    }

    /// Radial argument sqrt(A)|z| beyond which V is treated as zero.
    pub fn support_radius(&self) -> f64 {
        self.profile.r_max / self.big_a.sqrt().min(1.0)
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        let rho = self.big_a.sqrt() * norm(z);
        self.gamma * self.profile.value(rho)
    }

    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let s = norm(z);
        if s == 0.0 {
            return vec![0.0; z.len()];
        }
        let sa = self.big_a.sqrt();
        let d = self.gamma * sa * self.profile.derivative(sa * s) / s;
        z.iter().map(|zi| d * zi).collect()
    }

    /// Euclidean Laplacian of V from the interpolant's derivatives.
    pub fn laplacian(&self, z: &[f64]) -> f64 {
        let sa = self.big_a.sqrt();
        let rho = sa * norm(z);
        let [_, du, d2] = self.profile.eval(rho);
        let n = self.dim() as f64;
        let radial = if rho == 0.0 { n * d2 } else { d2 + (n - 1.0) / rho * du };
        self.gamma * self.big_a * radial
    }

    /// Residual of -c Delta V + a V - b V^{p-1}.
    pub fn residual(&self, z: &[f64]) -> f64 {
        let v = self.value(z);
        let c = self.coeffs;
        -c.c * self.laplacian(z) + c.a * v - c.b * v.max(0.0).powf(self.profile.p - 1.0)
    }
}

fn norm(z: &[f64]) -> f64 {
    z.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// psi^i(eta) = d V / d eta_i.
#[derive(Debug, Clone)]
pub struct KernelField {
    pub rescaled: RescaledProfile,
    /// Zero-based axis.
    pub axis: usize,
}

/// Kernel field for the 1-based axis index `i`.
pub fn linearized_kernel(rescaled: &RescaledProfile, i: usize) -> Result<KernelField> {
    let n = rescaled.dim();
    if i == 0 || i > n {
        return Err(Error::IndexOutOfRange { index: i, dim: n });
    }
    Ok(KernelField { rescaled: rescaled.clone(), axis: i - 1 })
}

impl KernelField {
    fn parts(&self, eta: &[f64]) -> (f64, f64, f64, f64) {
        let r = &self.rescaled;
        let sa = r.big_a.sqrt();
        let s = norm(eta);
        let rho = sa * s;
        let [_, du, d2] = r.profile.eval(rho);
        // U'(rho)/rho with its limit U''(0) at the origin
        let ratio = if rho < 1e-8 { d2 } else { du / rho };
        (sa, s, ratio, d2)
    }

    pub fn value(&self, eta: &[f64]) -> f64 {
        let (sa, _, ratio, _) = self.parts(eta);
        // gamma sqrt(A) U'(rho) eta_i / |eta| = gamma A (U'(rho)/rho) eta_i
        self.rescaled.gamma * sa * sa * ratio * eta[self.axis]
    }

    pub fn gradient(&self, eta: &[f64]) -> Vec<f64> {
        let (sa, s, ratio, d2) = self.parts(eta);
        let g = self.rescaled.gamma;
        let a = sa * sa;
        let i = self.axis;
        (0..eta.len())
            .map(|j| {
                let delta = if i == j { 1.0 } else { 0.0 };
                if s * sa < 1e-8 {
                    return g * a * d2 * delta;
                }
                let (ei, ej) = (eta[i] / s, eta[j] / s);
                g * a * (d2 * ei * ej + ratio * (delta - ei * ej))
            })
            .collect()
    }
}
