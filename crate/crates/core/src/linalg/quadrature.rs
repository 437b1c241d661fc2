//! Gauss-Hermite quadrature for standard-normal expectations.

use crate::error::Error;

pub const MIN_NODES: usize = 8;
pub const MAX_NODES: usize = 128;

/// Gauss-Hermite rule for the weight `exp(-x^2)` on the physicists' grid.
///
/// Nodes come from Newton iteration on the orthonormal Hermite recurrence,
/// seeded with the usual asymptotic guesses and mirrored about zero, so the
/// rule is exactly symmetric. [`Self::expect_gaussian`] rescales to standard
/// normal expectations and normalizes by the summed weights, which makes the
/// constant function integrate to exactly one.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds an `n`-node rule; `n` must lie in `[MIN_NODES, MAX_NODES]`.
    pub fn new(n: usize) -> Result<Self, Error> {
        if !(MIN_NODES..=MAX_NODES).contains(&n) {
            return Err(Error::InvalidArgument {
                op: "GaussHermite::new",
                detail: format!("node count {n} outside [{MIN_NODES}, {MAX_NODES}]"),
            });
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0f64;
        for i in 0..half {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            let mut converged = false;
            for _ in 0..200 {
                // Orthonormal Hermite recurrence under the exp(-x^2) weight.
                let mut p1 = std::f64::consts::PI.powf(-0.25);
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * (1.0 + z.abs()) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::NoConvergence {
                    op: "GaussHermite::new",
                    detail: format!("newton iteration stalled at root {i} of {n}"),
                });
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            let w = 2.0 / (pp * pp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[half - 1] = 0.0;
        }
        Ok(GaussHermite { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Physicists' nodes (descending) and weights for `exp(-x^2)`.
    pub fn node_weight_pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `E[f(h)]` for `h ~ N(0, 1)`.
    ///
    /// Normalizing by the summed weights (instead of the analytic sqrt(pi))
    /// makes `f = const` exact and cancels the rule's own rounding.
    pub fn expect_gaussian(&self, f: impl Fn(f64) -> f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            num += w * f(std::f64::consts::SQRT_2 * x);
            den += w;
        }
        num / den
    }
}
