//! Minimal dense linear-algebra kernel: truncated SVD via Gram
//! eigendecomposition, randomized SVD of implicitly factored products,
//! non-symmetric eigendecomposition, and the Moore-Penrose pseudo-inverse.
//!
//! Everything here operates on plain `ndarray` matrices and is a pure
//! function of its inputs.

mod eig;

pub use eig::eig_nonsymmetric;

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

/// Dense real matrix, row-major.
pub type Matrix = Array2<f64>;

/// Rank-K singular value decomposition with orthonormal factors.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// Left singular vectors, one per column (M1 x K).
    pub u: Matrix,
    /// Nonincreasing, nonnegative singular values.
    pub singular_values: Array1<f64>,
    /// Right singular vectors, one per column (M2 x K).
    pub v: Matrix,
}

impl TruncatedSvd {
    /// Reconstructs `U diag(sigma) V^T`.
    pub fn reconstruct(&self) -> Matrix {
        let us = &self.u * &self.singular_values;
        us.dot(&self.v.t())
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in nonincreasing order with matching eigenvector
/// columns.
pub fn sym_eig_desc(a: &Matrix) -> (Array1<f64>, Matrix) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eig_desc needs a square matrix");
    let mut a = a.clone();
    let mut v = Matrix::eye(n);
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if frob > 0.0 {
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[[p, q]] * a[[p, q]];
                }
            }
            if off.sqrt() <= 1e-15 * frob {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[[p, q]];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let theta = 0.5 * (a[[q, q]] - a[[p, p]]) / apq;
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for i in 0..n {
                        let aip = a[[i, p]];
                        let aiq = a[[i, q]];
                        a[[i, p]] = c * aip - s * aiq;
                        a[[i, q]] = s * aip + c * aiq;
                    }
                    for j in 0..n {
                        let apj = a[[p, j]];
                        let aqj = a[[q, j]];
                        a[[p, j]] = c * apj - s * aqj;
                        a[[q, j]] = s * apj + c * aqj;
                    }
                    for i in 0..n {
                        let vip = v[[i, p]];
                        let viq = v[[i, q]];
                        v[[i, p]] = c * vip - s * viq;
                        v[[i, q]] = s * vip + c * viq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[j, j]].partial_cmp(&a[[i, i]]).unwrap());
    let vals = Array1::from_iter(order.iter().map(|&i| a[[i, i]]));
    let mut vecs = Matrix::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vecs[[i, dst]] = v[[i, src]];
        }
    }
    (vals, vecs)
}

/// Best rank-K approximation of `a` via eigendecomposition of the Gram
/// matrix of the smaller side.
pub fn svd_topk(a: &Matrix, k: usize) -> Result<TruncatedSvd> {
    let (m, n) = a.dim();
    if k == 0 || k > m.min(n) {
        return Err(Error::Dimension(format!(
            "rank {k} out of range for a {m}x{n} matrix"
        )));
    }
    if n <= m {
        let gram = a.t().dot(a);
        let (vals, vecs) = sym_eig_desc(&gram);
        let sigma = Array1::from_iter(vals.iter().take(k).map(|&l| l.max(0.0).sqrt()));
        let v = vecs.slice(ndarray::s![.., ..k]).to_owned();
        let u = images_over_sigma(a, &v, &sigma);
        Ok(TruncatedSvd {
            u,
            singular_values: sigma,
            v,
        })
    } else {
        let gram = a.dot(&a.t());
        let (vals, vecs) = sym_eig_desc(&gram);
        let sigma = Array1::from_iter(vals.iter().take(k).map(|&l| l.max(0.0).sqrt()));
        let u = vecs.slice(ndarray::s![.., ..k]).to_owned();
        let at = a.t().to_owned();
        let v = images_over_sigma(&at, &u, &sigma);
        Ok(TruncatedSvd {
            u,
            singular_values: sigma,
            v,
        })
    }
}

/// Maps orthonormal right vectors through `a`, dividing by the singular
/// values; columns whose singular value is numerically zero are completed
/// to an orthonormal set instead.
fn images_over_sigma(a: &Matrix, basis: &Matrix, sigma: &Array1<f64>) -> Matrix {
    let m = a.nrows();
    let k = basis.ncols();
    let tol = sigma.get(0).copied().unwrap_or(0.0) * 1e-13;
    let mut out = Matrix::zeros((m, k));
    let mut null_cols = Vec::new();
    for j in 0..k {
        if sigma[j] > tol && sigma[j] > 0.0 {
            let img = a.dot(&basis.column(j)) / sigma[j];
            out.column_mut(j).assign(&img);
        } else {
            null_cols.push(j);
        }
    }
    // Complete numerically-null directions with canonical vectors
    // orthogonalized against the computed columns.
    let mut cursor = 0;
    for j in null_cols {
        while cursor < m {
            let mut cand = Array1::zeros(m);
            cand[cursor] = 1.0;
            cursor += 1;
            for jj in 0..k {
                if jj == j {
                    continue;
                }
                let col = out.column(jj);
                let proj = cand.dot(&col);
                cand = &cand - &(&col.to_owned() * proj);
            }
            let norm = cand.dot(&cand).sqrt();
            if norm > 0.5 {
                out.column_mut(j).assign(&(&cand / norm));
                break;
            }
        }
    }
    out
}

/// Linear operator given only through products, for sketching a large
/// matrix that is never materialized.
pub trait LowRankOp {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `self * x`
    fn apply(&self, x: &Matrix) -> Matrix;
    /// `self^T * x`
    fn apply_t(&self, x: &Matrix) -> Matrix;
}

/// Product `l * r^T` held in factored form.
pub struct FactoredOp<'a> {
    pub l: &'a Matrix,
    pub r: &'a Matrix,
}

impl LowRankOp for FactoredOp<'_> {
    fn nrows(&self) -> usize {
        self.l.nrows()
    }
    fn ncols(&self) -> usize {
        self.r.nrows()
    }
    fn apply(&self, x: &Matrix) -> Matrix {
        self.l.dot(&self.r.t().dot(x))
    }
    fn apply_t(&self, x: &Matrix) -> Matrix {
        self.r.dot(&self.l.t().dot(x))
    }
}

/// Approximate top-K SVD of the implicit product `l * r^T` with a Gaussian
/// sketch of width `k + oversample` and one power iteration.
pub fn randomized_svd_factored<R: Rng>(
    l: &Matrix,
    r: &Matrix,
    k: usize,
    oversample: usize,
    rng: &mut R,
) -> Result<TruncatedSvd> {
    if l.ncols() != r.ncols() {
        return Err(Error::Dimension(format!(
            "factor panels have {} and {} inner columns",
            l.ncols(),
            r.ncols()
        )));
    }
    randomized_svd_op(&FactoredOp { l, r }, k, oversample, rng)
}

/// Randomized top-K SVD of an arbitrary low-rank operator.
pub fn randomized_svd_op<R: Rng>(
    op: &impl LowRankOp,
    k: usize,
    oversample: usize,
    rng: &mut R,
) -> Result<TruncatedSvd> {
    let (m, n) = (op.nrows(), op.ncols());
    let sketch = k + oversample;
    if k == 0 || sketch > m.min(n) {
        return Err(Error::Dimension(format!(
            "sketch width {sketch} out of range for a {m}x{n} operator"
        )));
    }
    let omega = Matrix::from_shape_fn((n, sketch), |_| rng.sample(StandardNormal));
    let mut q = orthonormalize(op.apply(&omega));
    // One power iteration, re-orthonormalizing between products.
    q = orthonormalize(op.apply(&orthonormalize(op.apply_t(&q))));
    let b = op.apply_t(&q).t().to_owned(); // sketch x n
    let small = svd_topk(&b, k)?;
    let sigma1 = small.singular_values[0];
    let observed = small
        .singular_values
        .iter()
        .filter(|&&s| s > sigma1 * 1e-12 && s > 0.0)
        .count();
    if observed < k {
        return Err(Error::EffectiveRank {
            requested: k,
            observed,
        });
    }
    Ok(TruncatedSvd {
        u: q.dot(&small.u),
        singular_values: small.singular_values,
        v: small.v,
    })
}

/// Modified Gram-Schmidt with re-orthogonalization; columns that are
/// numerically dependent on earlier ones are zeroed rather than blown up
/// into noise directions.
pub(crate) fn orthonormalize(mut y: Matrix) -> Matrix {
    let k = y.ncols();
    for j in 0..k {
        let orig = y.column(j).dot(&y.column(j)).sqrt();
        for _pass in 0..2 {
            for i in 0..j {
                let proj = y.column(j).dot(&y.column(i));
                let prev = y.column(i).to_owned();
                let mut col = y.column_mut(j);
                col.scaled_add(-proj, &prev);
            }
        }
        let norm = y.column(j).dot(&y.column(j)).sqrt();
        if norm > orig * 1e-10 && norm > 0.0 {
            y.column_mut(j).mapv_inplace(|x| x / norm);
        } else {
            y.column_mut(j).fill(0.0);
        }
    }
    y
}

/// Moore-Penrose pseudo-inverse via the full SVD.
pub fn pseudo_inverse(a: &Matrix) -> Matrix {
    let (m, n) = a.dim();
    let svd = svd_topk(a, m.min(n)).expect("full-rank request is always in range");
    let sigma1 = svd.singular_values[0];
    // Singular values come from a Gram eigendecomposition, which caps their
    // relative accuracy near sqrt(eps); the rank cutoff must sit above that.
    let tol = sigma1 * ((m.max(n) as f64) * f64::EPSILON).sqrt();
    let inv_sigma =
        Array1::from_iter(svd.singular_values.iter().map(
            |&s| {
                if s > tol && s > 0.0 {
                    1.0 / s
                } else {
                    0.0
                }
            },
        ));
    let vs = &svd.v * &inv_sigma;
    vs.dot(&svd.u.t())
}

/// Dense inverse by Gauss-Jordan elimination with partial pivoting.
pub fn invert(a: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension(format!(
            "cannot invert a {}x{} matrix",
            n,
            a.ncols()
        )));
    }
    let mut work = a.clone();
    let mut inv = Matrix::eye(n);
    let scale = a.iter().map(|x| x.abs()).fold(0.0_f64, f64::max);
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if work[[row, col]].abs() > work[[pivot, col]].abs() {
                pivot = row;
            }
        }
        if work[[pivot, col]].abs() <= scale * 1e-300 {
            return Err(Error::Singular("matrix inversion".into()));
        }
        if pivot != col {
            for j in 0..n {
                work.swap([pivot, j], [col, j]);
                inv.swap([pivot, j], [col, j]);
            }
        }
        let d = work[[col, col]];
        for j in 0..n {
            work[[col, j]] /= d;
            inv[[col, j]] /= d;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = work[[row, col]];
            if f != 0.0 {
                for j in 0..n {
                    work[[row, j]] -= f * work[[col, j]];
                    inv[[row, j]] -= f * inv[[col, j]];
                }
            }
        }
    }
    Ok(inv)
}

/// Spectral condition number, `sigma_max / sigma_min`.
pub fn cond_2(a: &Matrix) -> f64 {
    let svd = svd_topk(a, a.nrows().min(a.ncols())).expect("full-rank request");
    let smax = svd.singular_values[0];
    let smin = svd.singular_values[svd.singular_values.len() - 1];
    if smin <= 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Frobenius norm.
pub fn frob(a: &Matrix) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(m: usize, n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_shape_fn((m, n), |_| rng.sample::<f64, _>(StandardNormal))
    }

    /// Dense SVD oracle built directly from the eigendecomposition of A^T A,
    /// independent of the svd_topk shortcut paths.
    fn svd_oracle(a: &Matrix) -> (Matrix, Array1<f64>, Matrix) {
        let gram = a.t().dot(a);
        let (vals, v) = sym_eig_desc(&gram);
        let sigma = vals.mapv(|l| l.max(0.0).sqrt());
        let mut u = Matrix::zeros((a.nrows(), v.ncols()));
        for j in 0..v.ncols() {
            if sigma[j] > 1e-12 {
                let col = a.dot(&v.column(j)) / sigma[j];
                u.column_mut(j).assign(&col);
            }
        }
        (u, sigma, v)
    }

    #[test]
    fn svd_identity() {
        let svd = svd_topk(&Matrix::eye(3), 2).unwrap();
        assert!((svd.singular_values[0] - 1.0).abs() < 1e-12);
        assert!((svd.singular_values[1] - 1.0).abs() < 1e-12);
        let gram = svd.u.t().dot(&svd.u);
        assert!(frob(&(&gram - &Matrix::eye(2))) < 1e-10);
    }

    #[test]
    fn svd_diagonal() {
        let a = array![[4.0, 0.0], [0.0, 1.0]];
        let svd = svd_topk(&a, 1).unwrap();
        assert!((svd.singular_values[0] - 4.0).abs() < 1e-12);
        assert!((svd.u[[0, 0]].abs() - 1.0).abs() < 1e-12);
        assert!((svd.v[[0, 0]].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_reconstructs_random_4x3() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(4, 3, &mut rng);
        let svd = svd_topk(&a, 3).unwrap();
        assert!(frob(&(&svd.reconstruct() - &a)) < 1e-10);
        let (_, sigma, _) = svd_oracle(&a);
        for j in 0..3 {
            assert!((svd.singular_values[j] - sigma[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn svd_rank_k_error_matches_next_singular_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a = random_matrix(10, 8, &mut rng);
            let full = svd_topk(&a, 8).unwrap();
            for k in 1..8 {
                let trunc = svd_topk(&a, k).unwrap();
                let err = frob(&(&trunc.reconstruct() - &a));
                let tail: f64 = full
                    .singular_values
                    .iter()
                    .skip(k)
                    .map(|s| s * s)
                    .sum::<f64>()
                    .sqrt();
                assert!((err - tail).abs() < 1e-8, "k={k} err={err} tail={tail}");
            }
        }
    }

    #[test]
    fn svd_rejects_oversized_k() {
        assert!(matches!(
            svd_topk(&Matrix::eye(3), 4),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn randomized_svd_matches_dense_on_exact_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = 4;
        let l = random_matrix(30, k, &mut rng);
        let r = random_matrix(25, k, &mut rng);
        let dense = l.dot(&r.t());
        let exact = svd_topk(&dense, k).unwrap();
        let approx = randomized_svd_factored(&l, &r, k, 6, &mut rng).unwrap();
        for j in 0..k {
            assert!((exact.singular_values[j] - approx.singular_values[j]).abs() < 1e-8);
        }
        assert!(frob(&(&approx.reconstruct() - &dense)) < 1e-8);
    }

    #[test]
    fn randomized_svd_zero_product_is_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l = Matrix::zeros((12, 3));
        let r = Matrix::zeros((10, 3));
        assert!(matches!(
            randomized_svd_factored(&l, &r, 2, 4, &mut rng),
            Err(Error::EffectiveRank { .. })
        ));
    }

    #[test]
    fn randomized_svd_subspace_angle_200() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let k = 5;
        let l = random_matrix(200, k, &mut rng);
        let r = random_matrix(200, k, &mut rng);
        let dense = l.dot(&r.t());
        let exact = svd_topk(&dense, k).unwrap();
        let approx = randomized_svd_factored(&l, &r, k, 10, &mut rng).unwrap();
        // Principal angles via singular values of U_exact^T U_approx.
        let overlap = exact.u.t().dot(&approx.u);
        let s = svd_topk(&overlap, k).unwrap();
        for j in 0..k {
            let c = s.singular_values[j].min(1.0);
            assert!(c.acos() < 1e-6, "principal angle too large: {}", c.acos());
        }
    }

    #[test]
    fn pinv_identity_and_diagonal() {
        let p = pseudo_inverse(&Matrix::eye(3));
        assert!(frob(&(&p - &Matrix::eye(3))) < 1e-12);
        let p = pseudo_inverse(&array![[2.0, 0.0], [0.0, 0.0]]);
        assert!(frob(&(&p - &array![[0.5, 0.0], [0.0, 0.0]])) < 1e-12);
    }

    #[test]
    fn pinv_full_column_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = random_matrix(6, 3, &mut rng);
        let p = pseudo_inverse(&a);
        assert!(frob(&(&p.dot(&a) - &Matrix::eye(3))) < 1e-10);
    }

    #[test]
    fn pinv_moore_penrose_identities_for_low_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for rank in 1..=4 {
            let l = random_matrix(6, rank, &mut rng);
            let r = random_matrix(4, rank, &mut rng);
            let a = l.dot(&r.t());
            let p = pseudo_inverse(&a);
            assert!(frob(&(&a.dot(&p).dot(&a) - &a)) < 1e-10);
            assert!(frob(&(&p.dot(&a).dot(&p) - &p)) < 1e-10);
            let ap = a.dot(&p);
            assert!(frob(&(&ap - &ap.t().to_owned())) < 1e-10);
            let pa = p.dot(&a);
            assert!(frob(&(&pa - &pa.t().to_owned())) < 1e-10);
        }
    }

    #[test]
    fn invert_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = random_matrix(5, 5, &mut rng);
        let inv = invert(&a).unwrap();
        assert!(frob(&(&a.dot(&inv) - &Matrix::eye(5))) < 1e-9);
        assert!(invert(&Matrix::zeros((3, 3))).is_err());
    }
}
