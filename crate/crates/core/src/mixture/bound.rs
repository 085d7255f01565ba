//! Evaluation of the mixture distribution and its free-energy bound.
//!
//! All sums over configurations in the λ-bound factorize because both the
//! components and the smoothing tables do: Σ_S R(S|l') Q(S|k) is the product
//! over nodes of ρ_{l'ki} = Σ_s R_i(s|l') q_ki(s).

use super::params::{BoundBreakdown, MixtureParams};
use crate::error::{Error, Result};
use crate::meanfield::{mean_moments, spin_entropy, MeanFieldParams};
use crate::model::{factorized_moments, Moments, Network, SpinConfig, Temperature, ENUMERATION_LIMIT};

/// q_li(s) for s = +1 (index 0) and s = -1 (index 1).
#[inline]
pub(crate) fn q_pair(m: f64) -> [f64; 2] {
    [0.5 * (1.0 + m), 0.5 * (1.0 - m)]
}

#[inline]
pub(crate) fn rho(r: [f64; 2], m: f64) -> f64 {
    let q = q_pair(m);
    r[0] * q[0] + r[1] * q[1]
}

/// Cached per-node overlaps ln ρ_{l'ki} and their sums ln Σ_S R(S|l') Q(S|k).
pub(crate) struct Overlaps {
    k: usize,
    n: usize,
    log_rho: Vec<f64>,
    log_r: Vec<f64>,
}

impl Overlaps {
    pub(crate) fn new(p: &MixtureParams) -> Self {
        let k = p.n_components();
        let n = p.n_nodes();
        let mut log_rho = vec![0.0; k * k * n];
        let mut log_r = vec![0.0; k * k];
        for lp in 0..k {
            for c in 0..k {
                let mut acc = 0.0;
                for i in 0..n {
                    let v = rho(p.smoothing[lp][i], p.means[c][i]).ln();
                    log_rho[(lp * k + c) * n + i] = v;
                    acc += v;
                }
                log_r[lp * k + c] = acc;
            }
        }
        Self { k, n, log_rho, log_r }
    }

    /// ln Σ_S R(S|lp) Q(S|c).
    #[inline]
    pub(crate) fn log_r(&self, lp: usize, c: usize) -> f64 {
        self.log_r[lp * self.k + c]
    }

    /// Σ_S R(S|lp) Q(S|c) with node `i` left out of the product.
    #[inline]
    pub(crate) fn r_without(&self, lp: usize, c: usize, i: usize) -> f64 {
        (self.log_r[lp * self.k + c] - self.log_rho[(lp * self.k + c) * self.n + i]).exp()
    }

    /// Refresh the entry for node `i` after R(·|lp) or m_c changed.
    #[inline]
    pub(crate) fn set(&mut self, p: &MixtureParams, lp: usize, c: usize, i: usize) {
        let idx = (lp * self.k + c) * self.n + i;
        let v = rho(p.smoothing[lp][i], p.means[c][i]).ln();
        self.log_r[lp * self.k + c] += v - self.log_rho[idx];
        self.log_rho[idx] = v;
    }

    /// π_l = Σ_k α_k Σ_S R(S|l) Q(S|k).
    pub(crate) fn overlap(&self, p: &MixtureParams, l: usize) -> f64 {
        (0..self.k)
            .map(|c| p.alphas[c] * self.log_r(l, c).exp())
            .sum()
    }
}

/// Q_mix(S) = Σ_l α_l Π_i q_li(s_i).
pub fn mix_prob(params: &MixtureParams, s: &SpinConfig) -> Result<f64> {
    if s.len() != params.n_nodes() {
        return Err(Error::LengthMismatch {
            expected: params.n_nodes(),
            found: s.len(),
        });
    }
    Ok(params
        .alphas
        .iter()
        .zip(&params.means)
        .map(|(&a, m)| a * component_prob(m, s.as_slice()))
        .sum())
}

pub(crate) fn component_prob(means: &[f64], s: &[i8]) -> f64 {
    means
        .iter()
        .zip(s)
        .map(|(&m, &si)| q_pair(m)[if si > 0 { 0 } else { 1 }])
        .product()
}

/// π_l = Σ_S R(S|l) Q_mix(S), evaluated in factorized form.
pub fn component_overlap(params: &MixtureParams, l: usize) -> Result<f64> {
    if l >= params.n_components() {
        return Err(Error::InvalidMixture(format!("no component {l}")));
    }
    Ok(Overlaps::new(params).overlap(params, l))
}

/// Exact I(l, S) by enumeration of all 2^L states.
pub fn mutual_info_exact(params: &MixtureParams) -> Result<f64> {
    let n = params.n_nodes();
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            n,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut info = 0.0;
    let mut comp = vec![0.0; params.n_components()];
    for bits in 0u64..(1 << n) {
        let s = SpinConfig::from_bits(bits, n);
        let mut mix = 0.0;
        for (l, m) in params.means.iter().enumerate() {
            comp[l] = component_prob(m, s.as_slice());
            mix += params.alphas[l] * comp[l];
        }
        for (l, &q) in comp.iter().enumerate() {
            let a = params.alphas[l];
            if a > 0.0 && q > 0.0 {
                info += a * q * (q / mix).ln();
            }
        }
    }
    Ok(info)
}

/// Σ_i Σ_s q_li(s) ln R_i(s|l).
pub(crate) fn expected_log_smoothing(p: &MixtureParams, l: usize) -> f64 {
    p.means[l]
        .iter()
        .zip(&p.smoothing[l])
        .map(|(&m, r)| {
            let q = q_pair(m);
            let up = if q[0] > 0.0 { q[0] * r[0].ln() } else { 0.0 };
            let down = if q[1] > 0.0 { q[1] * r[1].ln() } else { 0.0 };
            up + down
        })
        .sum()
}

pub(crate) fn lower_bound_with(p: &MixtureParams, ov: &Overlaps) -> f64 {
    let mut total = 1.0;
    for l in 0..p.n_components() {
        let a = p.alphas[l];
        total -= p.lambdas[l] * ov.overlap(p, l);
        if a > 0.0 {
            total += a * expected_log_smoothing(p, l) - a * a.ln() + a * p.lambdas[l].ln();
        }
    }
    total
}

/// I_λ(l, S), a tractable lower bound on the label/state mutual information.
pub fn mutual_info_lower_bound(params: &MixtureParams) -> f64 {
    lower_bound_with(params, &Overlaps::new(params))
}

/// E_{Q_l}[E]/T and H(Q_l) for one component.
pub(crate) fn component_terms(net: &Network, means: &[f64], t: f64) -> (f64, f64) {
    let entropy = means.iter().map(|&m| spin_entropy(m)).sum();
    (net.energy_of(means) / t, entropy)
}

fn check_net(params: &MixtureParams, net: &Network) -> Result<()> {
    if params.n_nodes() != net.n_nodes() {
        return Err(Error::LengthMismatch {
            expected: net.n_nodes(),
            found: params.n_nodes(),
        });
    }
    Ok(())
}

pub(crate) fn bound_with(params: &MixtureParams, net: &Network, t: f64, ov: &Overlaps) -> BoundBreakdown {
    let mut energy_term = 0.0;
    let mut entropy_term = 0.0;
    for (l, m) in params.means.iter().enumerate() {
        let a = params.alphas[l];
        if a > 0.0 {
            let (e, h) = component_terms(net, m, t);
            energy_term += a * e;
            entropy_term += a * h;
        }
    }
    let mutual_info_lb = lower_bound_with(params, ov);
    BoundBreakdown {
        energy_term,
        entropy_term,
        mutual_info_lb,
        total: energy_term - entropy_term - mutual_info_lb,
    }
}

/// Σ_l α_l L_F(Q_l) - I_λ(l, S): an upper bound on -ln Z(T) for every valid
/// parameter setting.
pub fn mixture_free_bound(params: &MixtureParams, net: &Network, t: Temperature) -> Result<BoundBreakdown> {
    check_net(params, net)?;
    Ok(bound_with(params, net, t.value(), &Overlaps::new(params)))
}

/// ⟨s_i s_j⟩ ≈ Σ_l α_l m_li m_lj, laid out with the bias unit at index 0.
pub fn mixture_pair_correlations(params: &MixtureParams) -> Moments {
    let mut acc = factorized_moments(&params.means[0]) * params.alphas[0];
    for (a, m) in params.alphas.iter().zip(&params.means).skip(1) {
        acc.scaled_add(*a, &factorized_moments(m));
    }
    acc.diag_mut().fill(1.0);
    acc
}

/// Pattern-averaged μ_i μ_j minus Σ_l α_l m_li m_lj.
pub fn mixture_learning_gradient(mu_per_pattern: &[MeanFieldParams], params: &MixtureParams) -> Result<Moments> {
    let clamped = mean_moments(mu_per_pattern)?;
    if clamped.nrows() != params.n_nodes() + 1 {
        return Err(Error::LengthMismatch {
            expected: params.n_nodes(),
            found: clamped.nrows() - 1,
        });
    }
    Ok(clamped - mixture_pair_correlations(params))
}
