//! Peak ansatz W, kernel fields Z^i, the eps-weighted inner product and the
//! projections onto span{Z^i} and its complement.

mod peak;
mod space;

pub use peak::{build_kernel_field, build_peak, gram_z, project_orthogonal, PeakAnsatz};
pub use space::{eps_inner, EpsSpace};

use crate::coeffs::CoefficientField;
use crate::error::{check_exponent, Error, Result};
use crate::ground_state::GroundStateProfile;
use crate::manifold::Manifold;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Radial cutoff: 1 on [0, r/2], 0 beyond r.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    /// e^{-1/(1-t)} / (e^{-1/(1-t)} + e^{-1/t}), t = (2s - r)/r.
    #[default]
    Smooth,
    /// exp(1 - 1/(1 - t^2)); flat to first order only at s = r/2.
    Bump,
}

impl Cutoff {
    pub fn eval(self, s: f64, r: f64) -> f64 {
        if s <= 0.5 * r {
            return 1.0;
        }
        if s >= r {
            return 0.0;
        }
        let t = (2.0 * s - r) / r;
        match self {
            Cutoff::Smooth => {
                let psi = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() };
                let (a, b) = (psi(1.0 - t), psi(t));
                a / (a + b)
            }
            Cutoff::Bump => (1.0 - 1.0 / (1.0 - t * t)).exp(),
        }
    }
}

/// Data that does not depend on eps.
#[derive(Clone)]
pub struct Problem {
    pub manifold: Arc<dyn Manifold>,
    pub coeffs: CoefficientField,
    pub profile: Arc<GroundStateProfile>,
    pub cutoff_radius: f64,
    pub cutoff: Cutoff,
    /// Grid nodes per length eps.
    pub nodes_per_eps: f64,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Problem(n = {}, p = {}, {})", self.profile.n, self.profile.p, self.manifold.describe())
    }
}

impl Problem {
    pub fn new(
        manifold: Arc<dyn Manifold>,
        coeffs: CoefficientField,
        profile: Arc<GroundStateProfile>,
        cutoff_radius: f64,
    ) -> Result<Self> {
        if manifold.dim() != profile.n {
            return Err(Error::InvalidParameter(format!(
                "profile dimension {} differs from manifold dimension {}",
                profile.n,
                manifold.dim()
            )));
        }
        check_exponent(profile.n, profile.p)?;
        if !(cutoff_radius > 0.0 && cutoff_radius <= manifold.injectivity_radius() * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "cutoff radius {cutoff_radius} must lie in (0, {}]",
                manifold.injectivity_radius()
            )));
        }
        Ok(Self { manifold, coeffs, profile, cutoff_radius, cutoff: Cutoff::Smooth, nodes_per_eps: 6.0 })
    }

    pub fn n(&self) -> usize {
        self.profile.n
    }

    pub fn p(&self) -> f64 {
        self.profile.p
    }

    /// f(u) = (u^+)^{p-1}
    pub fn f(&self, u: f64) -> f64 {
        if u > 0.0 {
            u.powf(self.p() - 1.0)
        } else {
            0.0
        }
    }

    /// One-sided derivative (p-1)(u^+)^{p-2} with f'(0) = 0.
    pub fn df(&self, u: f64) -> f64 {
        if u > 0.0 {
            (self.p() - 1.0) * u.powf(self.p() - 2.0)
        } else {
            0.0
        }
    }

    /// F(u) = (u^+)^p / p
    pub fn big_f(&self, u: f64) -> f64 {
        if u > 0.0 {
            u.powf(self.p()) / self.p()
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests;
