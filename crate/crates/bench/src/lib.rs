//! Shared fixtures for the kernel benchmarks.
//!
//! Everything is seeded so criterion measures the same workload on every
//! run.

use isoprune_core::data::{synthetic_blobs, Dataset};
use isoprune_core::init::{init_network, InitScheme, InitSpec};
use isoprune_core::network::{NetworkConfig, NetworkParams, Nonlinearity};
use isoprune_core::{Matrix, Rng};

/// A tanh net shaped like the experiment default: 784 in, `depth - 1`
/// hidden layers of 100, 10 out.
pub fn bench_net(depth: usize) -> NetworkConfig {
    let mut widths = vec![784];
    widths.extend(std::iter::repeat(100).take(depth - 1));
    widths.push(10);
    NetworkConfig::new(widths, Nonlinearity::Tanh).unwrap()
}

/// Variance-scaled parameters for [`bench_net`].
pub fn bench_params(net: &NetworkConfig, seed: u64) -> NetworkParams {
    let spec = InitSpec::new(InitScheme::VsGlorot, seed);
    init_network(net, &spec).unwrap()
}

/// A small labeled blob set matching the net's input width.
pub fn bench_data(n_per_class: usize, seed: u64) -> Dataset {
    synthetic_blobs(n_per_class, 10, 784, 0.12, &mut Rng::new(seed)).unwrap()
}

/// A square Gaussian matrix for the linear-algebra kernels.
pub fn gaussian_square(n: usize, seed: u64) -> Matrix {
    Rng::new(seed).gaussian_matrix(n, n, 1.0)
}
