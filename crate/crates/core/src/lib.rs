//! Lyapunov-Schmidt reduction for singularly perturbed elliptic problems
//! -eps^2 div(c grad u) + a u = b u^{p-1} on compact manifolds, with the
//! warped-product and harmonic-morphism lifts.

pub mod ansatz;
pub mod cli;
pub mod coeffs;
pub mod error;
pub mod expr;
pub mod fullsolve;
pub mod grid;
pub mod ground_state;
pub mod lift;
pub mod linsolve;
pub mod manifold;
pub mod numerics;
pub mod reduction;
pub mod ode;

pub use error::{Error, Result};
