//! Mixtures of factorized distributions as variational approximations to
//! the free phase.

mod bound;
mod optimize;
mod params;
mod update;

pub use bound::{
    component_overlap, mix_prob, mixture_free_bound, mixture_learning_gradient, mixture_pair_correlations,
    mutual_info_exact, mutual_info_lower_bound,
};
pub use optimize::{optimize_mixture, MixtureSettings, MixtureSolution, UpdateStep};
pub use params::{BoundBreakdown, MixtureParams, SMOOTHING_FLOOR};
pub use update::{update_alphas, update_component_means, update_lambdas, update_smoothing};
