//! Exhaustive state enumeration for small networks.
//!
//! The fast path walks free-node configurations in reflected Gray-code order,
//! so consecutive states differ by a single flip and the energy is updated in
//! O(L). The binary-counter path recomputes every energy from scratch and is
//! kept as an independent check on the fast path.

use super::network::Network;
use super::spin::ClampPattern;
use crate::error::{Error, Result};

/// Largest number of free nodes that may be enumerated.
pub const ENUMERATION_LIMIT: usize = 20;

/// Streaming log-sum-exp.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn push(&mut self, x: f64) {
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

fn initial_state(net: &Network, clamp: Option<&ClampPattern>) -> Result<(Vec<f64>, Vec<usize>)> {
    let n = net.n_nodes();
    let (state, free) = match clamp {
        Some(c) => {
            if c.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: c.len(),
                });
            }
            let state = (0..n)
                .map(|i| c.value(i).map_or(-1.0, |v| v as f64))
                .collect();
            (state, c.free_nodes())
        }
        None => (vec![-1.0; n], (0..n).collect()),
    };
    if free.len() > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            n: free.len(),
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok((state, free))
}

/// Calls `visit(spins, energy)` once for every assignment of the free nodes,
/// with clamped nodes held at their observed values.
pub fn for_each_state<F>(net: &Network, clamp: Option<&ClampPattern>, mut visit: F) -> Result<()>
where
    F: FnMut(&[f64], f64),
{
    let (mut s, free) = initial_state(net, clamp)?;
    let n = net.n_nodes();
    let w = net.weights();
    let mut field: Vec<f64> = (0..n).map(|i| net.local_field(i, &s)).collect();
    let mut energy = net.energy_of(&s);
    visit(&s, energy);

    let total: u64 = 1 << free.len();
    for step in 1..total {
        let k = free[step.trailing_zeros() as usize];
        energy += 2.0 * s[k] * field[k];
        s[k] = -s[k];
        let delta = 2.0 * s[k];
        for (j, f) in field.iter_mut().enumerate() {
            *f += w[[j, k]] * delta;
        }
        visit(&s, energy);
    }
    Ok(())
}

/// Same contract as [`for_each_state`], visiting states in binary-counter
/// order and evaluating each energy directly.
pub fn for_each_state_reference<F>(
    net: &Network,
    clamp: Option<&ClampPattern>,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(&[f64], f64),
{
    let (mut s, free) = initial_state(net, clamp)?;
    for bits in 0u64..(1 << free.len()) {
        for (b, &k) in free.iter().enumerate() {
            s[k] = if bits >> b & 1 == 1 { 1.0 } else { -1.0 };
        }
        visit(&s, net.energy_of(&s));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::spin::SpinConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

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

    #[test]
    fn gray_walk_visits_every_state_once_with_correct_energy() {
        let net = random_net(7, 3);
        let mut seen = HashSet::new();
        for_each_state(&net, None, |s, e| {
            let spins = SpinConfig::new(s.iter().map(|&v| v as i8).collect()).unwrap();
            let direct = net.energy(&spins).unwrap();
            assert!((direct - e).abs() < 1e-12);
            assert!(seen.insert(spins));
        })
        .unwrap();
        assert_eq!(seen.len(), 128);
    }

    #[test]
    fn clamped_nodes_never_move() {
        let net = random_net(5, 9);
        let clamp = ClampPattern::new(vec![Some(1), None, Some(-1), None, None]).unwrap();
        let mut count = 0;
        for_each_state(&net, Some(&clamp), |s, _| {
            assert_eq!(s[0], 1.0);
            assert_eq!(s[2], -1.0);
            count += 1;
        })
        .unwrap();
        assert_eq!(count, 8);
    }

    #[test]
    fn limit_enforced() {
        let net = Network::fully_connected(ENUMERATION_LIMIT + 1);
        assert!(matches!(
            for_each_state(&net, None, |_, _| {}),
            Err(Error::EnumerationLimit { .. })
        ));
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [0.3, -2.0, 5.0, 1.0, 4.9];
        let mut acc = LogSumExp::default();
        xs.iter().for_each(|&x| acc.push(x));
        let direct: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((acc.value() - direct).abs() < 1e-14);
    }
}
