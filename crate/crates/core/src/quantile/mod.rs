//! Exact algebra of discrete probability measures on the line through
//! their quantile functions.

mod measure;
mod step;

pub use measure::{
    cdf_of, measure_of_quantile, pushforward, quantile_of, wasserstein2, wasserstein2_sq, Atom,
    Cdf, DiscreteMeasure, ParticleState, PointMass,
};
pub use step::{
    antiderivative, l2_dist, l2_dist_sq, l2_inner, l2_norm_sq, PiecewiseLinear, StepFunction,
};
