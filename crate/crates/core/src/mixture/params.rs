use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::INIT_HALF_WIDTH;

/// Smallest value a smoothing-table entry may take.
pub const SMOOTHING_FLOOR: f64 = 1e-12;

/// Variational parameters of a mixture of factorized distributions.
///
/// `smoothing[l][i]` is the pair `[R_i(+1 | l), R_i(-1 | l)]`. Tables are not
/// required to be normalized; the bound is invariant to rescaling a
/// component's table once its λ is re-optimized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixture", into = "RawMixture")]
pub struct MixtureParams {
    pub(crate) alphas: Vec<f64>,
    pub(crate) means: Vec<Vec<f64>>,
    pub(crate) smoothing: Vec<Vec<[f64; 2]>>,
    pub(crate) lambdas: Vec<f64>,
    pub(crate) floor_hits: u64,
}

#[derive(Serialize, Deserialize)]
struct RawMixture {
    alphas: Vec<f64>,
    means: Vec<Vec<f64>>,
    smoothing: Vec<Vec<[f64; 2]>>,
    lambdas: Vec<f64>,
}

impl TryFrom<RawMixture> for MixtureParams {
    type Error = Error;

    fn try_from(r: RawMixture) -> Result<Self> {
        MixtureParams::new(r.alphas, r.means, r.smoothing, r.lambdas)
    }
}

impl From<MixtureParams> for RawMixture {
    fn from(p: MixtureParams) -> Self {
        RawMixture {
            alphas: p.alphas,
            means: p.means,
            smoothing: p.smoothing,
            lambdas: p.lambdas,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidMixture(msg.into())
}

impl MixtureParams {
    pub fn new(
        alphas: Vec<f64>,
        means: Vec<Vec<f64>>,
        smoothing: Vec<Vec<[f64; 2]>>,
        lambdas: Vec<f64>,
    ) -> Result<Self> {
        let k = alphas.len();
        if k == 0 {
            return Err(invalid("at least one component required"));
        }
        if means.len() != k || smoothing.len() != k || lambdas.len() != k {
            return Err(invalid("per-component blocks disagree on component count"));
        }
        if alphas.iter().any(|&a| !(a >= 0.0)) {
            return Err(invalid("mixing weights must be non-negative"));
        }
        if (alphas.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid("mixing weights must sum to 1"));
        }
        let n = means[0].len();
        for (l, (m, r)) in means.iter().zip(&smoothing).enumerate() {
            if m.len() != n || r.len() != n {
                return Err(invalid(format!("component {l} has the wrong node count")));
            }
            if let Some(&bad) = m.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
                return Err(invalid(format!("component {l} mean {bad} outside [-1, 1]")));
            }
            if r.iter().flatten().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(invalid(format!("component {l} smoothing table not positive")));
            }
        }
        if lambdas.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(invalid("lambdas must be positive"));
        }
        Ok(Self {
            alphas,
            means,
            smoothing,
            lambdas,
            floor_hits: 0,
        })
    }

    /// A one-component mixture holding the given means, uniform smoothing
    /// tables and the matching optimal λ = 2^L.
    pub fn single(means: Vec<f64>) -> Result<Self> {
        let n = means.len();
        let smoothing = vec![vec![[0.5, 0.5]; n]];
        Self::new(vec![1.0], vec![means], smoothing, vec![2f64.powi(n as i32)])
    }

    /// Starting point for optimization: uniform α, means uniform on
    /// (-0.1, 0.1), each smoothing table set to its component's own marginals,
    /// followed by one λ/smoothing/λ pass.
    pub fn initialize<R: Rng + ?Sized>(n_nodes: usize, n_components: usize, rng: &mut R) -> Result<Self> {
        if n_components == 0 {
            return Err(invalid("at least one component required"));
        }
        let means: Vec<Vec<f64>> = (0..n_components)
            .map(|_| {
                (0..n_nodes)
                    .map(|_| rng.random_range(-INIT_HALF_WIDTH..INIT_HALF_WIDTH))
                    .collect()
            })
            .collect();
        Self::from_means(means)
    }

    /// Equal-weight mixture over the given component means, with smoothing
    /// tables and λ prepared as in [`MixtureParams::initialize`].
    pub fn from_means(means: Vec<Vec<f64>>) -> Result<Self> {
        let k = means.len();
        let smoothing = means
            .iter()
            .map(|m| {
                m.iter()
                    .map(|&v| {
                        let up = (0.5 * (1.0 + v)).max(SMOOTHING_FLOOR);
                        let down = (0.5 * (1.0 - v)).max(SMOOTHING_FLOOR);
                        [up, down]
                    })
                    .collect()
            })
            .collect();
        let p = Self::new(vec![1.0 / k as f64; k], means, smoothing, vec![1.0; k])?;
        let p = super::update_lambdas(&p);
        let p = super::update_smoothing(&p);
        Ok(super::update_lambdas(&p))
    }

    pub fn n_components(&self) -> usize {
        self.alphas.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.means[0].len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn component_means(&self, l: usize) -> &[f64] {
        &self.means[l]
    }

    pub fn smoothing(&self) -> &[Vec<[f64; 2]>] {
        &self.smoothing
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// How many times a smoothing entry was raised to [`SMOOTHING_FLOOR`].
    pub fn floor_hits(&self) -> u64 {
        self.floor_hits
    }

    /// Swap component order; used to check label symmetry.
    pub fn permuted_components(&self, order: &[usize]) -> Self {
        Self {
            alphas: order.iter().map(|&l| self.alphas[l]).collect(),
            means: order.iter().map(|&l| self.means[l].clone()).collect(),
            smoothing: order.iter().map(|&l| self.smoothing[l].clone()).collect(),
            lambdas: order.iter().map(|&l| self.lambdas[l]).collect(),
            floor_hits: self.floor_hits,
        }
    }

    /// Reorder nodes consistently in every per-node block.
    pub fn permuted_nodes(&self, order: &[usize]) -> Self {
        Self {
            alphas: self.alphas.clone(),
            means: self
                .means
                .iter()
                .map(|m| order.iter().map(|&i| m[i]).collect())
                .collect(),
            smoothing: self
                .smoothing
                .iter()
                .map(|r| order.iter().map(|&i| r[i]).collect())
                .collect(),
            lambdas: self.lambdas.clone(),
            floor_hits: self.floor_hits,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Pieces of the mixture free-energy bound. `total = energy_term -
/// entropy_term - mutual_info_lb`, an upper bound on -ln Z(T).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundBreakdown {
    /// Σ_l α_l E_{Q_l}[E] / T
    pub energy_term: f64,
    /// Σ_l α_l H(Q_l)
    pub entropy_term: f64,
    /// I_λ(l, S)
    pub mutual_info_lb: f64,
    pub total: f64,
}
