//! Exact quantities by full enumeration: partition function, probabilities,
//! pair correlations, likelihood and its gradient.

use ndarray::Array2;

use super::enumerate::{for_each_state, LogSumExp};
use super::network::Network;
use super::spin::{ClampPattern, SpinConfig, Temperature};
use super::Moments;
use crate::error::{Error, Result};

/// ln Z(T).
pub fn log_partition(net: &Network, t: Temperature) -> Result<f64> {
    log_clamped_partition(net, None, t)
}

/// ln Σ_H exp(-E(H, V)/T) with the clamped nodes of `clamp` fixed; ln Z when `clamp` is `None`.
pub fn log_clamped_partition(
    net: &Network,
    clamp: Option<&ClampPattern>,
    t: Temperature,
) -> Result<f64> {
    let beta = 1.0 / t.value();
    let mut acc = LogSumExp::default();
    for_each_state(net, clamp, |_, e| acc.push(-beta * e))?;
    Ok(acc.value())
}

pub fn partition_function(net: &Network, t: Temperature) -> Result<f64> {
    Ok(log_partition(net, t)?.exp())
}

pub fn log_prob(net: &Network, s: &SpinConfig, t: Temperature) -> Result<f64> {
    let e = net.energy(s)?;
    Ok(-e / t.value() - log_partition(net, t)?)
}

/// ⟨s_i s_j⟩ under P(S) or, when `clamp` is given, under P(H | V).
///
/// Row/column 0 is the bias pseudo-unit s_0 = 1, so entry (0, i) is ⟨s_i⟩.
/// Node i sits at index i + 1. The diagonal is 1.
pub fn exact_pair_correlations(
    net: &Network,
    t: Temperature,
    clamp: Option<&ClampPattern>,
) -> Result<Moments> {
    let n = net.n_nodes();
    let beta = 1.0 / t.value();
    let log_z = log_clamped_partition(net, clamp, t)?;
    let mut acc = Array2::<f64>::zeros((n + 1, n + 1));
    for_each_state(net, clamp, |s, e| {
        let p = (-beta * e - log_z).exp();
        for i in 0..n {
            let ps = p * s[i];
            acc[[0, i + 1]] += ps;
            for j in i + 1..n {
                acc[[i + 1, j + 1]] += ps * s[j];
            }
        }
    })?;
    Ok(symmetrize_upper(acc))
}

/// Copy the strict upper triangle into the lower one and set the diagonal to 1.
pub(crate) fn symmetrize_upper(mut m: Moments) -> Moments {
    let d = m.nrows();
    for i in 0..d {
        m[[i, i]] = 1.0;
        for j in i + 1..d {
            m[[j, i]] = m[[i, j]];
        }
    }
    m
}

fn check_patterns(net: &Network, patterns: &[ClampPattern]) -> Result<()> {
    for p in patterns {
        if p.len() != net.n_nodes() {
            return Err(Error::LengthMismatch {
                expected: net.n_nodes(),
                found: p.len(),
            });
        }
    }
    Ok(())
}

/// Σ_n ln Σ_{H_n} P(H_n, V_n).
pub fn exact_log_likelihood(net: &Network, patterns: &[ClampPattern], t: Temperature) -> Result<f64> {
    check_patterns(net, patterns)?;
    let log_z = log_partition(net, t)?;
    let mut total = 0.0;
    for p in patterns {
        total += log_clamped_partition(net, Some(p), t)? - log_z;
    }
    Ok(total)
}

/// Pattern-averaged gradient of the log likelihood, (⟨s_i s_j⟩_C - ⟨s_i s_j⟩_F) / T,
/// laid out like [`exact_pair_correlations`]. The diagonal is zero.
pub fn exact_likelihood_gradient(
    net: &Network,
    patterns: &[ClampPattern],
    t: Temperature,
) -> Result<Moments> {
    check_patterns(net, patterns)?;
    if patterns.is_empty() {
        return Err(Error::InvalidConfig("no patterns".into()));
    }
    let clamped = mean_clamped_correlations(net, patterns, t)?;
    let free = exact_pair_correlations(net, t, None)?;
    Ok((clamped - free) / t.value())
}

/// Average of the exact clamped correlation matrices over `patterns`.
pub fn mean_clamped_correlations(
    net: &Network,
    patterns: &[ClampPattern],
    t: Temperature,
) -> Result<Moments> {
    let n = net.n_nodes();
    let mut sum = Array2::<f64>::zeros((n + 1, n + 1));
    for p in patterns {
        sum += &exact_pair_correlations(net, t, Some(p))?;
    }
    Ok(sum / patterns.len() as f64)
}

/// Model marginal over the first `n_visible` nodes, indexed so that bit i
/// of the table index set means visible node i is +1.
pub fn visible_marginals(net: &Network, n_visible: usize, t: Temperature) -> Result<Vec<f64>> {
    if n_visible > net.n_nodes() {
        return Err(Error::LengthMismatch {
            expected: net.n_nodes(),
            found: n_visible,
        });
    }
    let beta = 1.0 / t.value();
    let log_z = log_partition(net, t)?;
    let mut table = vec![0.0; 1 << n_visible];
    for_each_state(net, None, |s, e| {
        let idx = s[..n_visible]
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &v)| if v > 0.0 { acc | 1 << i } else { acc });
        table[idx] += (-beta * e - log_z).exp();
    })?;
    Ok(table)
}

/// KL(p ‖ q) = Σ p ln(p/q) over a shared finite support, with 0 ln 0 = 0.
pub fn kl_divergence_discrete(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::SupportMismatch(p.len(), q.len()));
    }
    let mut kl = 0.0;
    for (k, (&pk, &qk)) in p.iter().zip(q).enumerate() {
        if !(0.0..=1.0).contains(&pk) {
            return Err(Error::InvalidProbability(pk));
        }
        if !(0.0..=1.0).contains(&qk) {
            return Err(Error::InvalidProbability(qk));
        }
        if pk > 0.0 {
            if qk <= 0.0 {
                return Err(Error::ZeroSupport(k));
            }
            kl += pk * (pk / qk).ln();
        }
    }
    Ok(kl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::enumerate::for_each_state_reference;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_net(n: usize, seed: u64) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Network::fully_connected(n);
        for i in 0..n {
            for j in i + 1..n {
                net.set_weight(i, j, rng.random_range(-1.0..1.0)).unwrap();
            }
            net.set_bias(i, rng.random_range(-1.0..1.0));
        }
        net
    }

    // Plain probability-space sum in binary order, independent of the
    // Gray-code walk and of the log-domain accumulator.
    fn reference_z(net: &Network, t: f64) -> f64 {
        let mut z = 0.0;
        for_each_state_reference(net, None, |_, e| z += (-e / t).exp()).unwrap();
        z
    }

    #[test]
    fn zero_net_partition_is_power_of_two() {
        let net = Network::fully_connected(10);
        assert_relative_eq!(partition_function(&net, Temperature::UNIT).unwrap(), 1024.0, max_relative = 1e-14);
    }

    #[test]
    fn single_node_partition_closed_form() {
        let mut net = Network::fully_connected(1);
        net.set_bias(0, 0.7);
        let z = partition_function(&net, Temperature::UNIT).unwrap();
        assert_relative_eq!(z, 2.0 * 0.7f64.cosh(), max_relative = 1e-14);
        let lp = log_prob(&net, &SpinConfig::all_up(1), Temperature::UNIT).unwrap();
        assert_relative_eq!(lp.exp(), 0.7f64.exp() / (2.0 * 0.7f64.cosh()), max_relative = 1e-14);
    }

    #[test]
    fn random_partition_matches_reference_order() {
        for seed in 0..5 {
            let net = random_net(10, seed);
            for t in [1.0, 0.5, 3.0] {
                let z = partition_function(&net, Temperature::new(t).unwrap()).unwrap();
                assert_relative_eq!(z, reference_z(&net, t), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn uniform_log_prob() {
        let net = Network::fully_connected(3);
        let s = SpinConfig::new(vec![1, -1, -1]).unwrap();
        assert_relative_eq!(log_prob(&net, &s, Temperature::UNIT).unwrap(), (1.0f64 / 8.0).ln(), epsilon = 1e-14);
    }

    #[test]
    fn probabilities_normalize() {
        let net = random_net(6, 11);
        let t = Temperature::UNIT;
        let total: f64 = (0..64u64)
            .map(|b| log_prob(&net, &SpinConfig::from_bits(b, 6), t).unwrap().exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_spin_correlations() {
        let mut net = Network::fully_connected(2);
        net.set_weight(0, 1, 1.0).unwrap();
        let c = exact_pair_correlations(&net, Temperature::UNIT, None).unwrap();
        assert_relative_eq!(c[[1, 2]], 1.0f64.tanh(), epsilon = 1e-14);
        assert_eq!(c[[1, 1]], 1.0);
        assert_relative_eq!(c[[0, 1]], 0.0, epsilon = 1e-14);

        net.set_bias(0, 0.4);
        let clamp = ClampPattern::new(vec![None, Some(1)]).unwrap();
        let c = exact_pair_correlations(&net, Temperature::UNIT, Some(&clamp)).unwrap();
        assert_relative_eq!(c[[1, 2]], 1.4f64.tanh(), epsilon = 1e-14);
        assert_eq!(c[[0, 2]], 1.0);
    }

    #[test]
    fn zero_net_correlations_vanish() {
        let net = Network::fully_connected(4);
        let c = exact_pair_correlations(&net, Temperature::UNIT, None).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(c[[i, j]], expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn clamp_length_checked() {
        let net = Network::fully_connected(3);
        let clamp = ClampPattern::free(2);
        assert!(exact_pair_correlations(&net, Temperature::UNIT, Some(&clamp)).is_err());
    }

    #[test]
    fn likelihood_examples() {
        let net = Network::fully_connected(1);
        let p = ClampPattern::visible_prefix(1, &[1]).unwrap();
        assert_relative_eq!(
            exact_log_likelihood(&net, &[p], Temperature::UNIT).unwrap(),
            0.5f64.ln(),
            epsilon = 1e-14
        );

        let net = Network::fully_connected(2);
        let up = ClampPattern::visible_prefix(2, &[1, 1]).unwrap();
        let down = ClampPattern::visible_prefix(2, &[-1, -1]).unwrap();
        let data = [up.clone(), up, down];
        assert_relative_eq!(
            exact_log_likelihood(&net, &data, Temperature::UNIT).unwrap(),
            3.0 * 0.25f64.ln(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn hidden_marginalization_matches_reference() {
        let net = random_net(5, 21);
        let t = Temperature::UNIT;
        let v = [1i8, -1, -1, 1];
        let clamp = ClampPattern::visible_prefix(5, &v).unwrap();
        let ll = exact_log_likelihood(&net, &[clamp], t).unwrap();

        let z = reference_z(&net, 1.0);
        let mut num = 0.0;
        for h in [-1i8, 1] {
            let mut s = v.to_vec();
            s.push(h);
            num += (-net.energy(&SpinConfig::new(s).unwrap()).unwrap()).exp();
        }
        assert!((ll - (num / z).ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_net_gradient_all_up_data() {
        let net = Network::fully_connected(2);
        let up = ClampPattern::visible_prefix(2, &[1, 1]).unwrap();
        let g = exact_likelihood_gradient(&net, &[up.clone(), up], Temperature::UNIT).unwrap();
        assert_relative_eq!(g[[1, 2]], 1.0, epsilon = 1e-14);
        assert_relative_eq!(g[[0, 1]], 1.0, epsilon = 1e-14);
        assert_eq!(g[[1, 1]], 0.0);
    }

    #[test]
    fn gradient_vanishes_at_generating_parameters() {
        // Visible data weighted exactly by the model's own visible marginal:
        // the averaged clamped statistics reproduce the free statistics.
        let net = random_net(4, 5);
        let t = Temperature::UNIT;
        let n_vis = 3;
        let marg = visible_marginals(&net, n_vis, t).unwrap();
        let free = exact_pair_correlations(&net, t, None).unwrap();
        let mut clamped = Array2::<f64>::zeros((5, 5));
        for (idx, &p) in marg.iter().enumerate() {
            let v: Vec<i8> = (0..n_vis).map(|i| if idx >> i & 1 == 1 { 1 } else { -1 }).collect();
            let c = ClampPattern::visible_prefix(4, &v).unwrap();
            clamped = clamped + exact_pair_correlations(&net, t, Some(&c)).unwrap() * p;
        }
        for (a, b) in clamped.iter().zip(free.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn kl_examples() {
        let u = [0.25; 4];
        assert_eq!(kl_divergence_discrete(&u, &u).unwrap(), 0.0);
        assert_relative_eq!(
            kl_divergence_discrete(&[1.0, 0.0], &[0.5, 0.5]).unwrap(),
            2f64.ln(),
            epsilon = 1e-15
        );
        assert!(matches!(
            kl_divergence_discrete(&[0.5, 0.5], &[1.0, 0.0]),
            Err(Error::ZeroSupport(1))
        ));
        assert!(matches!(
            kl_divergence_discrete(&[1.0], &[0.5, 0.5]),
            Err(Error::SupportMismatch(1, 2))
        ));
    }

    #[test]
    fn kl_random_tables_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let mut p: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
            let mut q: Vec<f64> = (0..8).map(|_| rng.random::<f64>() + 1e-3).collect();
            let sp: f64 = p.iter().sum();
            let sq: f64 = q.iter().sum();
            p.iter_mut().for_each(|x| *x /= sp);
            q.iter_mut().for_each(|x| *x /= sq);
            let kl = kl_divergence_discrete(&p, &q).unwrap();
            let mut direct = 0.0;
            for k in 0..8 {
                direct += p[k] * p[k].ln() - p[k] * q[k].ln();
            }
            assert!(kl >= 0.0);
            assert!((kl - direct).abs() < 1e-13);
        }
    }
}
