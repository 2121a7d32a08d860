//! Whitening pairs (W1, W2) of the estimated cross-covariance: from its
//! rank-K SVD, W1 = Lambda U' and W2 = Lambda V' with
//! Lambda = diag(sigma^{-1/2}), so that W1 S12 W2' = I_K.

use crate::error::{Error, Result};
use crate::linalg::{
    randomized_svd_op, svd_topk, LowRankOp, Matrix, TruncatedSvd,
};
use ndarray::Array1;
use rand::Rng;

/// Whitening rows for both views plus the retained singular values of the
/// cross-covariance they were built from.
#[derive(Debug, Clone)]
pub struct WhiteningPair {
    /// K x M1.
    pub w1: Matrix,
    /// K x M2.
    pub w2: Matrix,
    /// The K retained singular values, nonincreasing.
    pub singular_values: Array1<f64>,
}

impl WhiteningPair {
    /// ‖W1 S12 W2' − I_K‖_F, the residual of the whitening identity.
    pub fn identity_error(&self, s12: &Matrix) -> f64 {
        let k = self.w1.nrows();
        let prod = self.w1.dot(s12).dot(&self.w2.t());
        crate::linalg::frob(&(&prod - &Matrix::eye(k)))
    }
}

/// How the truncated SVD underlying the whitening pair is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhiteningMethod {
    Exact,
    /// Gaussian sketch with the given oversampling width.
    Randomized { oversample: usize },
}

fn pair_from_svd(svd: TruncatedSvd, rank_tol_rel: f64, k: usize) -> Result<WhiteningPair> {
    let sigma1 = svd.singular_values[0];
    let tol = sigma1 * rank_tol_rel;
    let observed = svd
        .singular_values
        .iter()
        .filter(|&&s| s > tol && s > 0.0)
        .count();
    if observed < k {
        return Err(Error::EffectiveRank {
            requested: k,
            observed,
        });
    }
    let lambda = svd.singular_values.mapv(|s| 1.0 / s.sqrt());
    // Rows of W_j are the singular directions scaled by sigma^{-1/2}.
    let w1 = (&svd.u * &lambda).t().to_owned();
    let w2 = (&svd.v * &lambda).t().to_owned();
    Ok(WhiteningPair {
        w1,
        w2,
        singular_values: svd.singular_values,
    })
}

/// Whitening pair from a dense cross-covariance estimate via the exact
/// truncated SVD. Rank tolerance: sigma_K must exceed 1e-10 * sigma_1.
pub fn compute_whitening_exact(s12: &Matrix, k: usize) -> Result<WhiteningPair> {
    let svd = svd_topk(s12, k)?;
    pair_from_svd(svd, 1e-10, k)
}

/// Whitening pair from an implicit cross-covariance operator via the
/// randomized SVD. The looser 1e-6 rank tolerance reflects sketching
/// noise.
pub fn compute_whitening_randomized<R: Rng>(
    s12: &impl LowRankOp,
    k: usize,
    oversample: usize,
    rng: &mut R,
) -> Result<WhiteningPair> {
    let svd = randomized_svd_op(s12, k, oversample, rng)?;
    pair_from_svd(svd, 1e-6, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frob, FactoredOp};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn identity_input() {
        let s = Matrix::eye(3);
        let w = compute_whitening_exact(&s, 3).unwrap();
        assert!(w.identity_error(&s) < 1e-12);
        assert!(w.singular_values.iter().all(|&s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn scalar_four() {
        let s = array![[4.0]];
        let w = compute_whitening_exact(&s, 1).unwrap();
        assert!((w.w1[[0, 0]].abs() - 0.5).abs() < 1e-12);
        assert!((w.w2[[0, 0]].abs() - 0.5).abs() < 1e-12);
        assert!(w.identity_error(&s) < 1e-12);
    }

    #[test]
    fn rank_one_rejected_at_k2() {
        let s = array![[1.0, 2.0], [2.0, 4.0]];
        assert!(matches!(
            compute_whitening_exact(&s, 2),
            Err(Error::EffectiveRank {
                requested: 2,
                observed: 1
            })
        ));
    }

    #[test]
    fn whitening_identity_random_low_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in [1usize, 2, 5] {
            let l = Matrix::from_shape_fn((12, k), |_| rng.sample::<f64, _>(StandardNormal));
            let r = Matrix::from_shape_fn((9, k), |_| rng.sample::<f64, _>(StandardNormal));
            let s = l.dot(&r.t());
            let w = compute_whitening_exact(&s, k).unwrap();
            assert!(w.identity_error(&s) < 1e-8, "k = {k}");
        }
    }

    #[test]
    fn randomized_matches_identity_too() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = 4;
        let l = Matrix::from_shape_fn((40, k), |_| rng.sample::<f64, _>(StandardNormal));
        let r = Matrix::from_shape_fn((30, k), |_| rng.sample::<f64, _>(StandardNormal));
        let dense = l.dot(&r.t());
        let op = FactoredOp { l: &l, r: &r };
        let w = compute_whitening_randomized(&op, k, 8, &mut rng).unwrap();
        assert!(w.identity_error(&dense) < 1e-8);
    }

    #[test]
    fn any_invertible_rescaling_preserves_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let k = 3;
        let l = Matrix::from_shape_fn((8, k), |_| rng.sample::<f64, _>(StandardNormal));
        let r = Matrix::from_shape_fn((7, k), |_| rng.sample::<f64, _>(StandardNormal));
        let s = l.dot(&r.t());
        let w = compute_whitening_exact(&s, k).unwrap();
        let rot = Matrix::from_shape_fn((k, k), |_| rng.sample::<f64, _>(StandardNormal));
        let rot_inv_t = crate::linalg::invert(&rot).unwrap().t().to_owned();
        let w1b = rot.dot(&w.w1);
        let w2b = rot_inv_t.dot(&w.w2);
        let prod = w1b.dot(&s).dot(&w2b.t());
        assert!(frob(&(&prod - &Matrix::eye(k))) < 1e-8);
    }
}
