use serde::{Deserialize, Serialize};

use super::spin::ClampPattern;
use crate::error::{Error, Result};

/// Observed visible vectors with multiplicities.
///
/// Distinct vectors are kept in first-seen order so that anything derived
/// from the set is deterministic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternSet {
    patterns: Vec<Vec<i8>>,
    counts: Vec<usize>,
    /// (rows, cols) when the visible units form an image.
    pub grid: Option<(usize, usize)>,
}

impl PatternSet {
    pub fn from_patterns<I>(patterns: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<i8>>,
    {
        let mut set = Self {
            patterns: Vec::new(),
            counts: Vec::new(),
            grid: None,
        };
        for p in patterns {
            set.push(p, 1)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, pattern: Vec<i8>, count: usize) -> Result<()> {
        if count == 0 {
            return Err(Error::InvalidConfig("pattern multiplicity must be >= 1".into()));
        }
        if let Some(&bad) = pattern.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::InvalidSpin(bad as i64));
        }
        if let Some(first) = self.patterns.first() {
            if first.len() != pattern.len() {
                return Err(Error::LengthMismatch {
                    expected: first.len(),
                    found: pattern.len(),
                });
            }
        }
        match self.patterns.iter().position(|p| *p == pattern) {
            Some(k) => self.counts[k] += count,
            None => {
                self.patterns.push(pattern);
                self.counts.push(count);
            }
        }
        Ok(())
    }

    pub fn n_visible(&self) -> usize {
        self.patterns.first().map_or(0, |p| p.len())
    }

    pub fn n_distinct(&self) -> usize {
        self.patterns.len()
    }

    /// Total number of patterns counting multiplicity.
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i8], usize)> {
        self.patterns.iter().map(|p| p.as_slice()).zip(self.counts.iter().copied())
    }

    /// Every pattern repeated by its multiplicity.
    pub fn expanded(&self) -> Vec<Vec<i8>> {
        self.iter()
            .flat_map(|(p, c)| std::iter::repeat_n(p.to_vec(), c))
            .collect()
    }

    /// Clamp patterns over an `n_nodes` network with the visibles first.
    pub fn clamps(&self, n_nodes: usize) -> Result<Vec<ClampPattern>> {
        self.patterns
            .iter()
            .map(|p| ClampPattern::visible_prefix(n_nodes, p))
            .collect()
    }

    /// Relative frequencies, indexed like [`crate::model::visible_marginals`].
    pub fn empirical_distribution(&self) -> Vec<f64> {
        let total = self.total() as f64;
        let mut table = vec![0.0; 1 << self.n_visible()];
        for (p, c) in self.iter() {
            let idx = p
                .iter()
                .enumerate()
                .fold(0usize, |acc, (i, &v)| if v > 0 { acc | 1 << i } else { acc });
            table[idx] += c as f64 / total;
        }
        table
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_merge_into_counts() {
        let set = PatternSet::from_patterns([vec![1, 1], vec![1, 1], vec![-1, -1]]).unwrap();
        assert_eq!(set.n_distinct(), 2);
        assert_eq!(set.total(), 3);
        let p = set.empirical_distribution();
        assert!((p[0b11] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[0b00] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(set.expanded().len(), 3);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PatternSet::from_patterns([vec![1, 0]]).is_err());
        assert!(PatternSet::from_patterns([vec![1, 1], vec![1]]).is_err());
        let mut s = PatternSet::from_patterns([vec![1]]).unwrap();
        assert!(s.push(vec![1], 0).is_err());
    }
}
