//! Boltzmann machine representation and exact enumeration.

mod enumerate;
mod exact;
mod network;
mod patterns;
mod spin;

use ndarray::Array2;

pub use enumerate::{for_each_state, for_each_state_reference, LogSumExp, ENUMERATION_LIMIT};
pub use exact::{
    exact_likelihood_gradient, exact_log_likelihood, exact_pair_correlations, kl_divergence_discrete,
    log_clamped_partition, log_partition, log_prob, mean_clamped_correlations, partition_function,
    visible_marginals,
};
pub(crate) use exact::symmetrize_upper;
pub use network::{Network, NetworkFile, Topology};
pub use patterns::PatternSet;
pub use spin::{ClampPattern, SpinConfig, Temperature};

/// Second-moment matrix over the nodes plus the bias pseudo-unit.
///
/// Shape is (L+1) x (L+1); index 0 is s_0 = 1 and node i lives at i + 1.
pub type Moments = Array2<f64>;

/// Moments of a factorized distribution with the given means: entry (i, j) is
/// m_i m_j, (0, i) is m_i, and the diagonal is 1.
pub fn factorized_moments(means: &[f64]) -> Moments {
    let n = means.len();
    let mut m = Array2::<f64>::zeros((n + 1, n + 1));
    for i in 0..n {
        m[[0, i + 1]] = means[i];
        for j in i + 1..n {
            m[[i + 1, j + 1]] = means[i] * means[j];
        }
    }
    symmetrize_upper(m)
}
