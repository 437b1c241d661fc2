//! Critical scaling for signal-preserving initialization.
//!
//! For a wide random layer with weight variance `sigma_w^2 / fan_in` and
//! bias variance `sigma_b^2`, pre-activation variance follows the recursion
//! `q <- sigma_w^2 E[phi(sqrt(q) h)^2] + sigma_b^2` with `h ~ N(0, 1)`, and
//! gradients neither explode nor vanish exactly when
//! `chi = sigma_w^2 E[phi'(sqrt(q) h)^2] = 1`.
//!
//! The solver eliminates `sigma_w` through the criticality condition and
//! roots the remaining scalar equation in `q` alone:
//!
//! `R(q) = E[phi^2] / E[phi'^2] + sigma_b^2 - q = 0`,
//!
//! then sets `sigma_w = 1 / sqrt(E[phi'^2])`, so `chi = 1` holds by
//! construction. Two families need special handling before bisection:
//! `R == 0` identically (positively homogeneous activations like linear and
//! relu at `sigma_b = 0`, where every `q` is a fixed point and `q* = 1` is
//! reported), and a root exactly at `q = 0` (tanh at `sigma_b = 0`, the
//! degenerate critical point).

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::quadrature::GaussHermite;
use crate::network::Nonlinearity;

pub const DEFAULT_NODES: usize = 64;
pub const MIN_NODES: usize = 16;
pub const MAX_NODES: usize = crate::linalg::quadrature::MAX_NODES;

/// Critical point of the variance recursion, with self-consistency
/// diagnostics evaluated on the same quadrature rule that found it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanFieldSolution {
    pub nonlinearity: Nonlinearity,
    pub sigma_b: f64,
    pub sigma_w: f64,
    pub q_star: f64,
    pub chi: f64,
    pub residual_q: f64,
    pub residual_chi: f64,
    pub n_nodes: usize,
    pub converged: bool,
    pub method: String,
}

/// `E[phi(sqrt(q) h)^2]` under the standard normal.
fn second_moment(phi: Nonlinearity, q: f64, quad: &GaussHermite) -> f64 {
    let s = q.sqrt();
    quad.expect_gaussian(|h| {
        let y = phi.apply(s * h);
        y * y
    })
}

/// `E[phi'(sqrt(q) h)^2]` under the standard normal.
fn derivative_second_moment(phi: Nonlinearity, q: f64, quad: &GaussHermite) -> f64 {
    let s = q.sqrt();
    quad.expect_gaussian(|h| {
        let y = phi.derivative(s * h);
        y * y
    })
}

/// Solves for the critical `(sigma_w, q*)` pair at `chi = 1`.
///
/// Fails with a structured diagnostic when no critical point exists (for
/// example relu with `sigma_b > 0`, whose variance recursion has no fixed
/// point) or when the residuals exceed tolerance.
pub fn meanfield_solve(
    nonlinearity: Nonlinearity,
    sigma_b: f64,
    n_nodes: usize,
) -> Result<MeanFieldSolution, Error> {
    if !(MIN_NODES..=MAX_NODES).contains(&n_nodes) {
        return Err(Error::InvalidArgument {
            op: "meanfield_solve",
            detail: format!("n_nodes {n_nodes} outside [{MIN_NODES}, {MAX_NODES}]"),
        });
    }
    if !(sigma_b >= 0.0) || !sigma_b.is_finite() {
        return Err(Error::InvalidArgument {
            op: "meanfield_solve",
            detail: format!("sigma_b must be finite and non-negative, got {sigma_b}"),
        });
    }
    let quad = GaussHermite::new(n_nodes)?;
    let sb2 = sigma_b * sigma_b;
    let residual = |q: f64| {
        let e2 = second_moment(nonlinearity, q, &quad);
        let e2p = derivative_second_moment(nonlinearity, q, &quad);
        if e2p > 0.0 {
            Some(e2 / e2p + sb2 - q)
        } else {
            None
        }
    };

    // Scale-invariant family: R vanishes at every probe, so each q is a
    // fixed point and q* = 1 is the reported representative.
    let probes = [0.25, 0.5, 1.0, 2.0, 4.0];
    let family = probes.iter().all(|&q| match residual(q) {
        Some(r) => r.abs() <= 1e-9 * q.max(1.0),
        None => false,
    });

    let (q_star, method) = if family {
        (1.0, "scale-invariant family".to_string())
    } else if residual(0.0) == Some(0.0) {
        (0.0, "boundary root at q = 0".to_string())
    } else {
        // Bracket a sign change of R and bisect.
        let lo0 = if residual(0.0).is_some() { 0.0 } else { 1e-12 };
        let r_lo = residual(lo0).unwrap_or(f64::NAN);
        if !(r_lo > 0.0) {
            return Err(Error::NoConvergence {
                op: "meanfield_solve",
                detail: format!(
                    "{} with sigma_b = {sigma_b}: R({lo0}) = {r_lo}, expected positive",
                    nonlinearity.name()
                ),
            });
        }
        let mut lo = lo0;
        let mut hi = (2.0 * sb2).max(1.0);
        let mut bracketed = false;
        while hi <= 1e9 {
            match residual(hi) {
                Some(r) if r < 0.0 => {
                    bracketed = true;
                    break;
                }
                Some(_) => {
                    lo = hi;
                    hi *= 2.0;
                }
                None => {
                    return Err(Error::NoConvergence {
                        op: "meanfield_solve",
                        detail: format!(
                            "{} with sigma_b = {sigma_b}: derivative moment vanished at q = {hi}",
                            nonlinearity.name()
                        ),
                    });
                }
            }
        }
        if !bracketed {
            return Err(Error::NoConvergence {
                op: "meanfield_solve",
                detail: format!(
                    "{} with sigma_b = {sigma_b}: no fixed point of the variance \
                     recursion below q = 1e9 (R never changes sign)",
                    nonlinearity.name()
                ),
            });
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            match residual(mid) {
                Some(r) if r > 0.0 => lo = mid,
                Some(_) => hi = mid,
                None => break,
            }
            if hi - lo <= 1e-14 * hi.max(1.0) {
                break;
            }
        }
        (0.5 * (lo + hi), "bisection on q".to_string())
    };

    let e2p = derivative_second_moment(nonlinearity, q_star, &quad);
    if !(e2p > 0.0) {
        return Err(Error::NoConvergence {
            op: "meanfield_solve",
            detail: format!(
                "{}: derivative second moment vanished at q* = {q_star}",
                nonlinearity.name()
            ),
        });
    }
    let sigma_w = (1.0 / e2p).sqrt();
    let sw2 = sigma_w * sigma_w;
    let chi = sw2 * e2p;
    let residual_chi = (chi - 1.0).abs();
    let residual_q = (sw2 * second_moment(nonlinearity, q_star, &quad) + sb2 - q_star).abs();
    let converged = residual_q < 1e-8 && residual_chi < 1e-8;
    if !converged {
        return Err(Error::NoConvergence {
            op: "meanfield_solve",
            detail: format!(
                "{} with sigma_b = {sigma_b}: residual_q = {residual_q:.3e}, \
                 residual_chi = {residual_chi:.3e} exceed 1e-8 (method: {method})",
                nonlinearity.name()
            ),
        });
    }
    Ok(MeanFieldSolution {
        nonlinearity,
        sigma_b,
        sigma_w,
        q_star,
        chi,
        residual_q,
        residual_chi,
        n_nodes,
        converged,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_critical_scale_is_exactly_one() {
        let s = meanfield_solve(Nonlinearity::Linear, 0.0, DEFAULT_NODES).unwrap();
        assert_eq!(s.sigma_w, 1.0);
        assert_eq!(s.q_star, 1.0);
        assert!(s.converged);
        assert!(s.residual_q < 1e-12, "{}", s.residual_q);
        assert!(s.residual_chi < 1e-12);
        assert_eq!(s.method, "scale-invariant family");
    }

    #[test]
    fn relu_critical_scale_is_sqrt_two() {
        let s = meanfield_solve(Nonlinearity::Relu, 0.0, DEFAULT_NODES).unwrap();
        assert!(
            (s.sigma_w - std::f64::consts::SQRT_2).abs() < 1e-8,
            "{}",
            s.sigma_w
        );
        assert!(s.converged);
        assert!(s.residual_q < 1e-12);
    }

    #[test]
    fn tanh_without_bias_hits_the_degenerate_critical_point() {
        let s = meanfield_solve(Nonlinearity::Tanh, 0.0, DEFAULT_NODES).unwrap();
        assert_eq!(s.sigma_w, 1.0);
        assert_eq!(s.q_star, 0.0);
        assert_eq!(s.residual_q, 0.0);
        assert_eq!(s.residual_chi, 0.0);
        assert!(s.converged);
        assert_eq!(s.method, "boundary root at q = 0");
    }

    #[test]
    fn tanh_with_bias_solves_by_bisection_and_self_checks() {
        let s = meanfield_solve(Nonlinearity::Tanh, 0.1, DEFAULT_NODES).unwrap();
        assert!(s.converged);
        assert!(s.q_star > 0.0);
        assert!(s.sigma_w > 1.0, "saturation must be offset by sigma_w > 1");
        assert!(s.residual_q < 1e-10);
        assert_eq!(s.method, "bisection on q");

        // Independent check of both fixed-point equations on a fresh rule.
        let quad = GaussHermite::new(96).unwrap();
        let sq = s.q_star.sqrt();
        let e2 = quad.expect_gaussian(|h| (sq * h).tanh().powi(2));
        let e2p = quad.expect_gaussian(|h| {
            let t = (sq * h).tanh();
            (1.0 - t * t).powi(2)
        });
        let sw2 = s.sigma_w * s.sigma_w;
        assert!((sw2 * e2 + 0.01 - s.q_star).abs() < 1e-6);
        assert!((sw2 * e2p - 1.0).abs() < 1e-6);
    }

    #[test]
    fn larger_bias_needs_larger_q() {
        let a = meanfield_solve(Nonlinearity::Tanh, 0.1, DEFAULT_NODES).unwrap();
        let b = meanfield_solve(Nonlinearity::Tanh, 0.3, DEFAULT_NODES).unwrap();
        assert!(b.q_star > a.q_star);
    }

    #[test]
    fn relu_with_bias_has_no_fixed_point() {
        let err = meanfield_solve(Nonlinearity::Relu, 0.5, DEFAULT_NODES).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }), "{err}");
        assert!(err.to_string().contains("no fixed point"));
    }

    #[test]
    fn node_count_bounds_are_enforced() {
        assert!(meanfield_solve(Nonlinearity::Tanh, 0.0, 8).is_err());
        assert!(meanfield_solve(Nonlinearity::Tanh, 0.0, 256).is_err());
        assert!(meanfield_solve(Nonlinearity::Tanh, 0.0, 16).is_ok());
    }

    #[test]
    fn solution_is_deterministic() {
        let a = meanfield_solve(Nonlinearity::Tanh, 0.2, 32).unwrap();
        let b = meanfield_solve(Nonlinearity::Tanh, 0.2, 32).unwrap();
        assert_eq!(a.sigma_w.to_bits(), b.sigma_w.to_bits());
        assert_eq!(a.q_star.to_bits(), b.q_star.to_bits());
    }
}
