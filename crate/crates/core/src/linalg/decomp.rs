//! Householder QR and one-sided Jacobi SVD.
//!
//! QR produces the unique semi-orthogonal factor with a positive R diagonal,
//! so factorizations are deterministic functions of the input. The SVD
//! orthogonalizes column pairs with Jacobi rotations, which keeps high
//! relative accuracy on the small singular values that condition-number
//! diagnostics depend on.

use crate::error::Error;
use crate::linalg::matrix::Matrix;

/// Thin singular value decomposition `a = u * diag(s) * v^T`.
///
/// `singular_values` is sorted descending; `u` is `m x p` and `v` is `n x p`
/// with `p = min(m, n)`. Columns of `u` paired with zero singular values are
/// left as zero vectors.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    pub u: Matrix,
    pub v: Matrix,
}

/// Semi-orthogonal factor of the QR decomposition.
///
/// For a tall input (`rows >= cols`) the result `q` satisfies `q^T q = I`;
/// for a wide input the rows are orthonormalized instead (`q q^T = I`) by
/// factorizing the transpose. The sign convention fixes `diag(R) > 0`, which
/// makes the factor unique for full-rank inputs.
pub fn qr_orthonormal(a: &Matrix) -> Result<Matrix, Error> {
    if !a.is_finite() {
        return Err(Error::NonFinite {
            op: "qr_orthonormal",
        });
    }
    if a.rows() >= a.cols() {
        thin_q(a)
    } else {
        Ok(thin_q(&a.transpose())?.transpose())
    }
}

fn thin_q(a: &Matrix) -> Result<Matrix, Error> {
    let (m, n) = a.shape();
    let mut r = a.clone();
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n);
    let mut diag_negative = vec![false; n];

    for k in 0..n {
        let norm = (k..m).map(|i| r[(i, k)] * r[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::RankDeficient {
                op: "qr_orthonormal",
                column: k,
            });
        }
        let x0 = r[(k, k)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let beta = 2.0 / vnorm2;
        for j in (k + 1)..n {
            let dot: f64 = v.iter().enumerate().map(|(t, &vt)| vt * r[(k + t, j)]).sum();
            let s = beta * dot;
            for (t, &vt) in v.iter().enumerate() {
                r[(k + t, j)] -= s * vt;
            }
        }
        diag_negative[k] = alpha < 0.0;
        reflectors.push((v, beta));
    }

    let mut q = Matrix::zeros(m, n);
    for j in 0..n {
        q[(j, j)] = 1.0;
    }
    for k in (0..n).rev() {
        let (v, beta) = &reflectors[k];
        for j in 0..n {
            let dot: f64 = v.iter().enumerate().map(|(t, &vt)| vt * q[(k + t, j)]).sum();
            let s = beta * dot;
            for (t, &vt) in v.iter().enumerate() {
                q[(k + t, j)] -= s * vt;
            }
        }
    }
    for k in 0..n {
        if diag_negative[k] {
            for i in 0..m {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }
    Ok(q)
}

const JACOBI_TOL: f64 = 1e-15;
const JACOBI_MAX_SWEEPS: usize = 64;

/// One-sided Jacobi SVD.
pub fn svd(a: &Matrix) -> Result<SvdResult, Error> {
    if !a.is_finite() {
        return Err(Error::NonFinite { op: "svd" });
    }
    let transposed = a.rows() < a.cols();
    let b = if transposed { a.transpose() } else { a.clone() };
    let (m, n) = b.shape();

    // Work on rows of g = b^T so each column of b is a contiguous slice.
    let mut g = b.transpose();
    let mut vt = Matrix::identity(n);

    let mut converged = n == 1;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotations = 0usize;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let (app, aqq, apq) = {
                    let rp = g.row(p);
                    let rq = g.row(q);
                    let mut app = 0.0;
                    let mut aqq = 0.0;
                    let mut apq = 0.0;
                    for (&x, &y) in rp.iter().zip(rq) {
                        app += x * x;
                        aqq += y * y;
                        apq += x * y;
                    }
                    (app, aqq, apq)
                };
                if apq == 0.0 || apq.abs() <= JACOBI_TOL * (app * aqq).sqrt() {
                    continue;
                }
                rotations += 1;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = if zeta.abs() < 1e150 {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                } else {
                    0.5 / zeta
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut g, p, q, c, s);
                rotate_rows(&mut vt, p, q, c, s);
            }
        }
        if rotations == 0 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            op: "svd",
            detail: format!("jacobi sweeps exceeded {JACOBI_MAX_SWEEPS}"),
        });
    }

    let sigmas: Vec<f64> = (0..n)
        .map(|j| g.row(j).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| sigmas[y].partial_cmp(&sigmas[x]).unwrap().then(x.cmp(&y)));

    let mut u = Matrix::zeros(m, n);
    let mut v = Matrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (j, &src) in order.iter().enumerate() {
        let sigma = sigmas[src];
        singular_values.push(sigma);
        if sigma > 0.0 {
            for (i, &x) in g.row(src).iter().enumerate() {
                u[(i, j)] = x / sigma;
            }
        }
        for (i, &x) in vt.row(src).iter().enumerate() {
            v[(i, j)] = x;
        }
    }

    if transposed {
        Ok(SvdResult {
            singular_values,
            u: v,
            v: u,
        })
    } else {
        Ok(SvdResult {
            singular_values,
            u,
            v,
        })
    }
}

/// Applies the Givens rotation to rows `p` and `q` in place.
fn rotate_rows(mat: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let cols = mat.cols();
    let data = mat.data_mut();
    let (head, tail) = data.split_at_mut(q * cols);
    let rp = &mut head[p * cols..(p + 1) * cols];
    let rq = &mut tail[..cols];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let xp = c * *x - s * *y;
        let yq = s * *x + c * *y;
        *x = xp;
        *y = yq;
    }
}
