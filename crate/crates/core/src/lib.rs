//! Prune untrained fully-connected networks by connection sensitivity and
//! diagnose the result through signal-propagation spectra.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: dense matrix kernels (deterministic matmul, Householder QR,
//!   one-sided Jacobi SVD) and Gauss-Hermite quadrature
//! - [`rng`]: seedable xoshiro256++ generator with Gaussian sampling
//! - [`data`]: IDX image/label loading, synthetic clusters, splits, batches
//! - [`network`]: feed-forward nets, masked execution, gradients, Jacobians
//! - [`init`]: weight initialization schemes, including critical orthogonal
//! - [`meanfield`]: critical-point solver for (sigma_w, q*) at chi = 1
//! - [`saliency`]: connection-sensitivity scores and top-k mask selection
//! - [`isometry`]: input-output Jacobian singular-value spectra
//! - [`trainer`]: SGD with momentum over masked networks
//!
//! Everything is deterministic given seeds: fixed summation order, fixed
//! traversal order, no threading.

pub mod data;
pub mod error;
pub mod init;
pub mod isometry;
pub mod linalg;
pub mod meanfield;
pub mod network;
pub mod pgm;
pub mod rng;
pub mod saliency;
pub mod trainer;

pub use error::Error;
pub use linalg::matrix::Matrix;
pub use linalg::decomp::SvdResult;
pub use linalg::quadrature::GaussHermite;
pub use rng::Rng;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
