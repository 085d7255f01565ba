//! Fixtures shared by the benchmarks.

use boltzmix::experiments::{gen_random_nets, image_topology, IMAGE_GRID};
use boltzmix::learning::init_network;
use boltzmix::model::Network;

/// A fully connected net with parameters uniform on (-1, 1).
pub fn random_net(n_nodes: usize, seed: u64) -> Network {
    gen_random_nets(1, n_nodes, [-1.0, 1.0], seed).unwrap().remove(0)
}

/// The 74-node image network with small Gaussian parameters.
pub fn image_net(seed: u64) -> Network {
    init_network(&image_topology(IMAGE_GRID, 10).unwrap(), 0.1, seed).unwrap()
}
