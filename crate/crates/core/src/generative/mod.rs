//! Conditional VAE generative memory with latent separation.

mod centroids;
mod consolidate;
mod cvae;
mod latent;

pub use centroids::ConditionCentroids;
pub use consolidate::{consolidate, ConsolidationConfig, ConsolidationReport};
pub use cvae::{BatchMeans, CVae, CVaeConfig, LossBreakdown, LossWeights};
pub use latent::{
    abs_cos, batch_condition_means, kl_to_prior, mean_pairwise_abs_cos, reparameterize, reparameterize_with_noise,
    separation_penalty, separation_penalty_grad, LatentCode, LOG_VAR_MAX, LOG_VAR_MIN, NORM_GUARD,
};
