use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::spin::SpinConfig;
use crate::error::{Error, Result};

/// Which node pairs may carry a nonzero coupling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl Topology {
    /// Edges are 0-based unordered pairs; duplicates and orientation are normalized.
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut out = Vec::new();
        for (i, j) in edges {
            if i == j || i >= n_nodes || j >= n_nodes {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({i}, {j}) invalid for {n_nodes} nodes"
                )));
            }
            out.push((i.min(j), i.max(j)));
        }
        out.sort_unstable();
        out.dedup();
        Ok(Self { n_nodes, edges: out })
    }

    pub fn complete(n_nodes: usize) -> Self {
        let edges = (0..n_nodes)
            .flat_map(|i| (i + 1..n_nodes).map(move |j| (i, j)))
            .collect();
        Self { n_nodes, edges }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// A Boltzmann machine over ±1 units with symmetric couplings and biases.
///
/// Couplings live in a dense symmetric matrix with zero diagonal. Entries
/// outside the adjacency are held at exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    weights: Array2<f64>,
    biases: Array1<f64>,
    adjacency: Array2<bool>,
}

impl Network {
    pub fn zeros(topology: &Topology) -> Self {
        let n = topology.n_nodes();
        let mut adjacency = Array2::from_elem((n, n), false);
        for &(i, j) in topology.edges() {
            adjacency[[i, j]] = true;
            adjacency[[j, i]] = true;
        }
        Self {
            weights: Array2::zeros((n, n)),
            biases: Array1::zeros(n),
            adjacency,
        }
    }

    pub fn fully_connected(n: usize) -> Self {
        Self::zeros(&Topology::complete(n))
    }

    pub fn n_nodes(&self) -> usize {
        self.biases.len()
    }

    pub fn topology(&self) -> Topology {
        Topology {
            n_nodes: self.n_nodes(),
            edges: self.edges(),
        }
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n_nodes();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adjacency[[i, j]])
            .collect()
    }

    /// Independent parameters: one per edge plus one bias per node.
    pub fn n_parameters(&self) -> usize {
        self.edges().len() + self.n_nodes()
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[[i, j]]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[[i, j]]
    }

    pub fn bias(&self, i: usize) -> f64 {
        self.biases[i]
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn biases(&self) -> &Array1<f64> {
        &self.biases
    }

    pub fn set_weight(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        if i == j || !self.adjacency[[i, j]] {
            return Err(Error::NotAdjacent(i, j));
        }
        self.weights[[i, j]] = w;
        self.weights[[j, i]] = w;
        Ok(())
    }

    pub fn set_bias(&mut self, i: usize, b: f64) {
        self.biases[i] = b;
    }

    /// Σ_j w_ij x_j + b_i.
    pub fn local_field(&self, i: usize, x: &[f64]) -> f64 {
        let row = self.weights.row(i);
        let mut acc = self.biases[i];
        for (w, v) in row.iter().zip(x) {
            acc += w * v;
        }
        acc
    }

    /// E(s) = -Σ_i { Σ_{j>i} w_ij s_i s_j + b_i s_i }.
    pub fn energy(&self, s: &SpinConfig) -> Result<f64> {
        let n = self.n_nodes();
        if s.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: s.len(),
            });
        }
        let x: Vec<f64> = s.as_slice().iter().map(|&v| v as f64).collect();
        Ok(self.energy_of(&x))
    }

    /// Energy (or its mean under a factorized distribution with means `x`).
    pub(crate) fn energy_of(&self, x: &[f64]) -> f64 {
        let n = self.n_nodes();
        let mut e = 0.0;
        for i in 0..n {
            let mut pair = 0.0;
            for j in i + 1..n {
                pair += self.weights[[i, j]] * x[j];
            }
            e -= x[i] * (pair + self.biases[i]);
        }
        e
    }

    /// Every weight and bias multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            weights: &self.weights * factor,
            biases: &self.biases * factor,
            adjacency: self.adjacency.clone(),
        }
    }

    pub fn to_file(&self) -> NetworkFile {
        NetworkFile {
            n_nodes: self.n_nodes(),
            edges: self
                .edges()
                .into_iter()
                .map(|(i, j)| (i + 1, j + 1, self.weights[[i, j]]))
                .collect(),
            biases: self.biases.to_vec(),
        }
    }

    pub fn from_file(file: &NetworkFile) -> Result<Self> {
        let n = file.n_nodes;
        if file.biases.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: file.biases.len(),
            });
        }
        let mut edges = Vec::with_capacity(file.edges.len());
        for &(i, j, _) in &file.edges {
            if i == 0 || j == 0 {
                return Err(Error::InvalidNetwork(
                    "index 0 is the bias pseudo-node and cannot appear in edges".into(),
                ));
            }
            edges.push((i - 1, j - 1));
        }
        let mut net = Self::zeros(&Topology::new(n, edges)?);
        for &(i, j, w) in &file.edges {
            net.set_weight(i - 1, j - 1, w)?;
        }
        for (i, &b) in file.biases.iter().enumerate() {
            net.set_bias(i, b);
        }
        Ok(net)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk network layout. Node indices are 1-based; index 0 is reserved
/// for the bias pseudo-node, whose couplings are the `biases` list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    #[serde(rename = "L")]
    pub n_nodes: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub biases: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_examples() {
        let net = Network::fully_connected(3);
        let s = SpinConfig::new(vec![1, -1, 1]).unwrap();
        assert_eq!(net.energy(&s).unwrap(), 0.0);

        let mut net = Network::fully_connected(2);
        net.set_weight(0, 1, 1.0).unwrap();
        assert_eq!(net.energy(&SpinConfig::all_up(2)).unwrap(), -1.0);

        let mut net = Network::fully_connected(1);
        net.set_bias(0, 0.5);
        assert_eq!(net.energy(&SpinConfig::all_up(1)).unwrap(), -0.5);
    }

    #[test]
    fn energy_length_mismatch() {
        let net = Network::fully_connected(3);
        assert!(matches!(
            net.energy(&SpinConfig::all_up(2)),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn non_edges_stay_zero() {
        let topo = Topology::new(3, [(0, 1)]).unwrap();
        let mut net = Network::zeros(&topo);
        assert!(net.set_weight(0, 2, 1.0).is_err());
        assert!(net.set_weight(1, 1, 1.0).is_err());
        net.set_weight(1, 0, 0.3).unwrap();
        assert_eq!(net.weight(0, 1), 0.3);
        assert_eq!(net.weight(1, 0), 0.3);
        assert_eq!(net.weight(0, 2), 0.0);
    }

    #[test]
    fn complete_graph_parameter_count() {
        assert_eq!(Network::fully_connected(10).n_parameters(), 55);
    }

    #[test]
    fn json_layout_is_one_based() {
        let topo = Topology::new(3, [(0, 2)]).unwrap();
        let mut net = Network::zeros(&topo);
        net.set_weight(0, 2, -0.25).unwrap();
        net.set_bias(1, 0.5);
        let v: serde_json::Value = serde_json::from_str(&net.to_json().unwrap()).unwrap();
        assert_eq!(v["L"], 3);
        assert_eq!(v["edges"][0][0], 1);
        assert_eq!(v["edges"][0][1], 3);
        assert_eq!(v["edges"][0][2], -0.25);
        assert_eq!(v["biases"][1], 0.5);
        let back = Network::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn bias_node_rejected_in_edges() {
        let bad = r#"{"L": 2, "edges": [[0, 1, 1.0]], "biases": [0.0, 0.0]}"#;
        assert!(Network::from_json(bad).is_err());
    }
}
