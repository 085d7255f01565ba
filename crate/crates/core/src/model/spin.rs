use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An assignment of ±1 to every node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(states: Vec<i8>) -> Result<Self> {
        if let Some(&bad) = states.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidSpin(bad as i64));
        }
        Ok(Self(states))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Bit `i` of `bits` set means node `i` is +1.
    pub fn from_bits(bits: u64, n: usize) -> Self {
        Self((0..n).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i] as f64
    }
}

/// Observed values for a subset of nodes.
///
/// `values[i]` is `Some(±1)` for a clamped node and `None` for a free one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClampPattern {
    values: Vec<Option<i8>>,
}

impl ClampPattern {
    pub fn new(values: Vec<Option<i8>>) -> Result<Self> {
        for v in values.iter().flatten() {
            if *v != 1 && *v != -1 {
                return Err(Error::InvalidSpin(*v as i64));
            }
        }
        Ok(Self { values })
    }

    /// Clamp the first `visible.len()` nodes of an `n`-node network,
    /// leaving the remaining nodes free.
    pub fn visible_prefix(n: usize, visible: &[i8]) -> Result<Self> {
        if visible.len() > n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: visible.len(),
            });
        }
        let mut values: Vec<Option<i8>> = visible.iter().map(|&v| Some(v)).collect();
        values.resize(n, None);
        Self::new(values)
    }

    pub fn free(n: usize) -> Self {
        Self {
            values: vec![None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, i: usize) -> Option<i8> {
        self.values[i]
    }

    pub fn is_clamped(&self, i: usize) -> bool {
        self.values[i].is_some()
    }

    pub fn free_nodes(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&i| self.values[i].is_none())
            .collect()
    }

    pub fn clamped_nodes(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&i| self.values[i].is_some())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Temperature(f64);

impl Temperature {
    pub const UNIT: Temperature = Temperature(1.0);

    pub fn new(t: f64) -> Result<Self> {
        if t.is_finite() && t > 0.0 {
            Ok(Self(t))
        } else {
            Err(Error::InvalidTemperature(t))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Temperature {
    fn default() -> Self {
        Self::UNIT
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_spin_values() {
        assert!(SpinConfig::new(vec![1, 0, -1]).is_err());
        assert!(ClampPattern::new(vec![Some(2), None]).is_err());
        assert!(SpinConfig::new(vec![1, -1]).is_ok());
    }

    #[test]
    fn visible_prefix_leaves_tail_free() {
        let c = ClampPattern::visible_prefix(4, &[1, -1]).unwrap();
        assert_eq!(c.clamped_nodes(), vec![0, 1]);
        assert_eq!(c.free_nodes(), vec![2, 3]);
        assert_eq!(c.value(1), Some(-1));
    }

    #[test]
    fn temperature_must_be_positive() {
        assert!(Temperature::new(0.0).is_err());
        assert!(Temperature::new(-1.0).is_err());
        assert!(Temperature::new(f64::NAN).is_err());
        assert_eq!(Temperature::new(2.5).unwrap().value(), 2.5);
    }

    #[test]
    fn bits_map_to_spins() {
        let s = SpinConfig::from_bits(0b101, 3);
        assert_eq!(s.as_slice(), &[1, -1, 1]);
    }
}
