//! Dimension reduction by warped products and harmonic morphisms: lifting
//! base solutions, the identities behind the lifts, and the dilation
//! condition as a numerical check.

mod morphism;
mod scenario;
mod warped;

pub use morphism::{
    coordinate_fiber_mean_curvature, hm_condition_check, morphism_commutation_check, HmReport, PointMap, PointScalar,
    PointVector, Submersion,
};
pub use scenario::{exponent_status, revolution_scenario, ExponentStatus, PredictedFiber, RevolutionScenario};
pub use warped::{lift_field, lift_warped, random_product_point, warped_fiber_mean_curvature, warped_identity_check, LiftReport};

#[cfg(test)]
mod tests;
