//! Finite-sample estimators of generalized expectations and generalized
//! cross-covariance matrices, the unbiased cross-covariance estimator, and
//! whitened projections of the third-order count-corrected cumulant,
//! together with tiny-scale tensor oracles for testing.
//!
//! Two estimator families coexist: the weight-normalized (slightly biased)
//! estimators used at every nonzero processing point, and the unbiased
//! correction-factor estimators used at t = 0.

use crate::error::{Error, Result};
use crate::linalg::{LowRankOp, Matrix};
use crate::view::ViewMatrix;
use crate::whitening::WhiteningPair;
use ndarray::{Array1, Array3, Axis};

/// Point t = (t1, t2) at which generalized moments are evaluated; weights
/// are e^{t1'x1 + t2'x2} per sample.
#[derive(Debug, Clone)]
pub struct ProcessingPoint {
    pub t1: Array1<f64>,
    pub t2: Array1<f64>,
}

impl ProcessingPoint {
    pub fn zero(m1: usize, m2: usize) -> Self {
        ProcessingPoint {
            t1: Array1::zeros(m1),
            t2: Array1::zeros(m2),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.t1.iter().all(|&v| v == 0.0) && self.t2.iter().all(|&v| v == 0.0)
    }
}

/// Generalized moments of the stacked observation at one processing point.
#[derive(Debug, Clone)]
pub struct GenMoments {
    /// Stacked generalized expectation, length M1 + M2.
    pub gen_mean: Array1<f64>,
    /// Generalized cross-covariance, M1 x M2.
    pub gen_cross_cov: Matrix,
}

/// Exponentially tilted sample weights, normalized to sum to one. The max
/// exponent is subtracted before exponentiation so large tilts cannot
/// overflow. `check_spread` additionally rejects points where a single
/// sample carries essentially all of the weight.
fn normalized_weights(exponents: &Array1<f64>, check_spread: bool) -> Result<Array1<f64>> {
    if exponents.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateWeights);
    }
    let gmax = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w = exponents.mapv(|g| (g - gmax).exp());
    let sum = w.sum();
    if !sum.is_finite() || sum <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    if check_spread {
        // The max-weight sample contributes exactly 1 to the sum.
        let rest = sum - 1.0;
        if rest <= exponents.len() as f64 * 1e-14 {
            return Err(Error::DegenerateWeights);
        }
    }
    Ok(w / sum)
}

fn stacked_exponents(x1: &ViewMatrix, x2: &ViewMatrix, t: &ProcessingPoint) -> Result<Array1<f64>> {
    if t.t1.len() != x1.nvars() || t.t2.len() != x2.nvars() {
        return Err(Error::Dimension(format!(
            "processing point lengths ({}, {}) do not match view sizes ({}, {})",
            t.t1.len(),
            t.t2.len(),
            x1.nvars(),
            x2.nvars()
        )));
    }
    if x1.nsamples() != x2.nsamples() {
        return Err(Error::Dimension(format!(
            "views have {} and {} samples",
            x1.nsamples(),
            x2.nsamples()
        )));
    }
    Ok(&x1.matvec_t(&t.t1) + &x2.matvec_t(&t.t2))
}

/// Weighted mean (sum x_n w_n) / (sum w_n) with exponential-tilt weights
/// from `t`; equals the sample mean at t = 0.
pub fn gen_expectation_hat(x: &ViewMatrix, t: &Array1<f64>) -> Result<Array1<f64>> {
    if t.len() != x.nvars() {
        return Err(Error::Dimension(format!(
            "tilt length {} does not match {} variables",
            t.len(),
            x.nvars()
        )));
    }
    if t.iter().all(|&v| v == 0.0) {
        return Ok(x.mean());
    }
    let w = normalized_weights(&x.matvec_t(t), false)?;
    Ok(weighted_view_mean(x, &w))
}

/// `sum_n w_n x_n` for normalized weights.
fn weighted_view_mean(x: &ViewMatrix, w: &Array1<f64>) -> Array1<f64> {
    let mut acc = Array1::zeros(x.nvars());
    for j in 0..x.nsamples() {
        let wj = w[j];
        x.fold_col(j, |row, val| acc[row] += wj * val);
    }
    acc
}

/// `sum_n w_n x1_n x2_n^T` without forming intermediates larger than the
/// output.
fn weighted_cross(x1: &ViewMatrix, x2: &ViewMatrix, w: &Array1<f64>) -> Matrix {
    match (x1, x2) {
        (ViewMatrix::Dense(a1), ViewMatrix::Dense(a2)) => {
            let scaled = a1 * w;
            scaled.dot(&a2.t())
        }
        _ => {
            let mut out = Matrix::zeros((x1.nvars(), x2.nvars()));
            for j in 0..x1.nsamples() {
                let wj = w[j];
                x1.fold_col(j, |r1, v1| {
                    let wv = wj * v1;
                    x2.fold_col(j, |r2, v2| out[[r1, r2]] += wv * v2);
                });
            }
            out
        }
    }
}

/// Weight-normalized generalized cross-covariance at `t`:
/// `sum w x1 x2' / sum w  -  (weighted mean1)(weighted mean2)'`.
pub fn gen_cross_covariance_hat(
    x1: &ViewMatrix,
    x2: &ViewMatrix,
    t: &ProcessingPoint,
) -> Result<Matrix> {
    let n = x1.nsamples();
    if n < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: n });
    }
    let w = normalized_weights(&stacked_exponents(x1, x2, t)?, !t.is_zero())?;
    let mu1 = weighted_view_mean(x1, &w);
    let mu2 = weighted_view_mean(x2, &w);
    let cross = weighted_cross(x1, x2, &w);
    let outer = outer_product(&mu1, &mu2);
    Ok(cross - outer)
}

/// Stacked generalized expectation and cross-covariance at one point.
pub fn gen_moments(x1: &ViewMatrix, x2: &ViewMatrix, t: &ProcessingPoint) -> Result<GenMoments> {
    let w = normalized_weights(&stacked_exponents(x1, x2, t)?, !t.is_zero())?;
    let mu1 = weighted_view_mean(x1, &w);
    let mu2 = weighted_view_mean(x2, &w);
    let gen_cross_cov = weighted_cross(x1, x2, &w) - outer_product(&mu1, &mu2);
    let mut gen_mean = Array1::zeros(mu1.len() + mu2.len());
    gen_mean.slice_mut(ndarray::s![..mu1.len()]).assign(&mu1);
    gen_mean.slice_mut(ndarray::s![mu1.len()..]).assign(&mu2);
    Ok(GenMoments {
        gen_mean,
        gen_cross_cov,
    })
}

fn outer_product(a: &Array1<f64>, b: &Array1<f64>) -> Matrix {
    let av = a.view().insert_axis(Axis(1));
    let bv = b.view().insert_axis(Axis(0));
    av.dot(&bv)
}

/// Unbiased cross-covariance `[X1 X2' - N mean1 mean2'] / (N - 1)`.
pub fn s12_hat(x1: &ViewMatrix, x2: &ViewMatrix) -> Result<Matrix> {
    let n = x1.nsamples();
    if n != x2.nsamples() {
        return Err(Error::Dimension(format!(
            "views have {} and {} samples",
            n,
            x2.nsamples()
        )));
    }
    if n < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: n });
    }
    let ones = Array1::ones(n);
    let cross = weighted_cross(x1, x2, &ones);
    let outer = outer_product(&x1.mean(), &x2.mean());
    Ok((cross - outer * n as f64) / (n as f64 - 1.0))
}

/// The unbiased cross-covariance as an implicit operator, for randomized
/// sketching without materializing the M1 x M2 matrix.
pub struct S12Op<'a> {
    x1: &'a ViewMatrix,
    x2: &'a ViewMatrix,
    mean1: Array1<f64>,
    mean2: Array1<f64>,
    n: usize,
}

impl<'a> S12Op<'a> {
    pub fn new(x1: &'a ViewMatrix, x2: &'a ViewMatrix) -> Result<Self> {
        let n = x1.nsamples();
        if n != x2.nsamples() {
            return Err(Error::Dimension(format!(
                "views have {} and {} samples",
                n,
                x2.nsamples()
            )));
        }
        if n < 2 {
            return Err(Error::InsufficientSamples { need: 2, got: n });
        }
        Ok(S12Op {
            x1,
            x2,
            mean1: x1.mean(),
            mean2: x2.mean(),
            n,
        })
    }
}

impl LowRankOp for S12Op<'_> {
    fn nrows(&self) -> usize {
        self.x1.nvars()
    }
    fn ncols(&self) -> usize {
        self.x2.nvars()
    }
    fn apply(&self, x: &Matrix) -> Matrix {
        let eta = 1.0 / (self.n as f64 - 1.0);
        let inner = self.x2.mul_left_t(x); // N x c
        let first = self.x1.mul_right(&inner);
        let m2x = self.mean2.view().insert_axis(Axis(0)).dot(x); // 1 x c
        let second = self.mean1.view().insert_axis(Axis(1)).dot(&m2x) * self.n as f64;
        (first - second) * eta
    }
    fn apply_t(&self, x: &Matrix) -> Matrix {
        let eta = 1.0 / (self.n as f64 - 1.0);
        let inner = self.x1.mul_left_t(x);
        let first = self.x2.mul_right(&inner);
        let m1x = self.mean1.view().insert_axis(Axis(0)).dot(x);
        let second = self.mean2.view().insert_axis(Axis(1)).dot(&m1x) * self.n as f64;
        (first - second) * eta
    }
}

/// `W1 S12(t) W2'` with the weight-normalized estimator, computed from the
/// K x N projected panels. The caller supplies effective whitening rows
/// (which may already absorb exponential-deflation factors).
pub fn whitened_gen_cross_cov(
    x1: &ViewMatrix,
    x2: &ViewMatrix,
    t: &ProcessingPoint,
    w1_eff: &Matrix,
    w2_eff: &Matrix,
) -> Result<Matrix> {
    let n = x1.nsamples();
    if n < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: n });
    }
    let w = normalized_weights(&stacked_exponents(x1, x2, t)?, !t.is_zero())?;
    let a = x1.left_mul(w1_eff); // K x N
    let b = x2.left_mul(w2_eff);
    let wa = &a * &w; // columns scaled by weights
    let cross = wa.dot(&b.t());
    let mu_a = a.dot(&w);
    let mu_b = b.dot(&w);
    Ok(cross - outer_product(&mu_a, &mu_b))
}

/// Whitened projection of the unbiased count-corrected third cumulant:
/// `W1 T(v_j) W2'` with `v_j = W_j' u`, assembled from K x N panels in
/// O(R N K) without forming any M-dimensional tensor. The third-cumulant
/// part uses the N/((N-1)(N-2)) unbiasing factor; the Poisson diagonal
/// correction subtracts the matching unbiased covariance with the third
/// index contracted onto `v_j`.
pub fn whitened_t_projection(
    x1: &ViewMatrix,
    x2: &ViewMatrix,
    w: &WhiteningPair,
    u: &Array1<f64>,
    j: usize,
) -> Result<Matrix> {
    if j != 1 && j != 2 {
        return Err(Error::InvalidParameter(format!("view index {j}, expected 1 or 2")));
    }
    if w.w1.ncols() != x1.nvars() || w.w2.ncols() != x2.nvars() {
        return Err(Error::Dimension(format!(
            "whitening shapes ({}, {}) do not match view sizes ({}, {})",
            w.w1.ncols(),
            w.w2.ncols(),
            x1.nvars(),
            x2.nvars()
        )));
    }
    if u.len() != w.w1.nrows() {
        return Err(Error::Dimension(format!(
            "projection vector length {} does not match K = {}",
            u.len(),
            w.w1.nrows()
        )));
    }
    let n = x1.nsamples();
    if n != x2.nsamples() {
        return Err(Error::Dimension(format!(
            "views have {} and {} samples",
            n,
            x2.nsamples()
        )));
    }
    if n < 3 {
        return Err(Error::InsufficientSamples { need: 3, got: n });
    }
    let nf = n as f64;
    let eta1 = 1.0 / (nf - 1.0);
    let eta2 = nf / ((nf - 1.0) * (nf - 2.0));

    let a = x1.left_mul(&w.w1); // K x N
    let b = x2.left_mul(&w.w2);
    let vj = if j == 1 {
        w.w1.t().dot(u)
    } else {
        w.w2.t().dot(u)
    };
    let proj = if j == 1 {
        x1.matvec_t(&vj)
    } else {
        x2.matvec_t(&vj)
    };

    let abar = a.mean_axis(Axis(1)).unwrap();
    let bbar = b.mean_axis(Axis(1)).unwrap();
    let pbar = proj.mean().unwrap();
    let ac = &a - &abar.view().insert_axis(Axis(1));
    let bc = &b - &bbar.view().insert_axis(Axis(1));
    let pc = proj.mapv(|p| p - pbar);
    let kstat = (&ac * &pc).dot(&bc.t()) * eta2;

    // Diagonal correction: unbiased covariance of (diag(v_j)-scaled view j
    // side, other side).
    let (sa, sb) = if j == 1 {
        (x1.left_mul_scaled(&w.w1, &vj), b)
    } else {
        (a, x2.left_mul_scaled(&w.w2, &vj))
    };
    let sa_mean = sa.mean_axis(Axis(1)).unwrap();
    let sb_mean = sb.mean_axis(Axis(1)).unwrap();
    let correction = (sa.dot(&sb.t()) - outer_product(&sa_mean, &sb_mean) * nf) * eta1;

    Ok(kstat - correction)
}

/// Materialized count-corrected third cumulant tensor, a testing oracle for
/// tiny dimensions only: unbiased third k-statistic of (x1, x2, x_j) minus
/// the Poisson diagonal correction on the repeated view index.
pub fn naive_t_cumulant(x1: &ViewMatrix, x2: &ViewMatrix, j: usize) -> Result<Array3<f64>> {
    if j != 1 && j != 2 {
        return Err(Error::InvalidParameter(format!("view index {j}, expected 1 or 2")));
    }
    let (m1, m2) = (x1.nvars(), x2.nvars());
    let mj = if j == 1 { m1 } else { m2 };
    let guard = 10_000;
    let actual = m1 * m2 * mj;
    if actual > guard {
        return Err(Error::TensorTooLarge { actual, guard });
    }
    let n = x1.nsamples();
    if n < 3 {
        return Err(Error::InsufficientSamples { need: 3, got: n });
    }
    let nf = n as f64;
    let eta2 = nf / ((nf - 1.0) * (nf - 2.0));

    let d1 = x1.to_dense();
    let d2 = x2.to_dense();
    let dj = if j == 1 { &d1 } else { &d2 };
    let mu1 = x1.mean();
    let mu2 = x2.mean();
    let muj = if j == 1 { &mu1 } else { &mu2 };

    let mut t = Array3::zeros((m1, m2, mj));
    for s in 0..n {
        for i1 in 0..m1 {
            let c1 = d1[[i1, s]] - mu1[i1];
            for i2 in 0..m2 {
                let c2 = d2[[i2, s]] - mu2[i2];
                for i3 in 0..mj {
                    let c3 = dj[[i3, s]] - muj[i3];
                    t[[i1, i2, i3]] += c1 * c2 * c3;
                }
            }
        }
    }
    t *= eta2;

    let s12 = s12_hat(x1, x2)?;
    for i1 in 0..m1 {
        for i2 in 0..m2 {
            if j == 1 {
                t[[i1, i2, i1]] -= s12[[i1, i2]];
            } else {
                t[[i1, i2, i2]] -= s12[[i1, i2]];
            }
        }
    }
    Ok(t)
}

/// Contracts the third tensor index onto `v`.
pub fn project_tensor(t: &Array3<f64>, v: &Array1<f64>) -> Result<Matrix> {
    let (m1, m2, m3) = t.dim();
    if v.len() != m3 {
        return Err(Error::Dimension(format!(
            "projection vector length {} does not match tensor third dimension {m3}",
            v.len()
        )));
    }
    let mut out = Matrix::zeros((m1, m2));
    for i1 in 0..m1 {
        for i2 in 0..m2 {
            let mut acc = 0.0;
            for i3 in 0..m3 {
                acc += t[[i1, i2, i3]] * v[i3];
            }
            out[[i1, i2]] = acc;
        }
    }
    Ok(out)
}

/// Directional-difference approximation of the whitened third-cumulant
/// projection from two generalized covariance evaluations:
/// `[W1 S12(delta t_j) W2' - W1 S12(0) W2'] / delta` minus the exponential
/// first-order term on the tilted side. Converges to
/// `whitened_t_projection` as delta shrinks.
pub fn gencov_t_approx(
    x1: &ViewMatrix,
    x2: &ViewMatrix,
    w: &WhiteningPair,
    u: &Array1<f64>,
    j: usize,
    delta: f64,
) -> Result<Matrix> {
    if j != 1 && j != 2 {
        return Err(Error::InvalidParameter(format!("view index {j}, expected 1 or 2")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let (m1, m2) = (x1.nvars(), x2.nvars());
    let vj = if j == 1 {
        w.w1.t().dot(u)
    } else {
        w.w2.t().dot(u)
    };
    let t = if j == 1 {
        ProcessingPoint {
            t1: &vj * delta,
            t2: Array1::zeros(m2),
        }
    } else {
        ProcessingPoint {
            t1: Array1::zeros(m1),
            t2: &vj * delta,
        }
    };
    if u.iter().all(|&v| v == 0.0) {
        return Ok(Matrix::zeros((w.w1.nrows(), w.w2.nrows())));
    }
    let tilted = whitened_gen_cross_cov(x1, x2, &t, &w.w1, &w.w2)?;
    let base = whitened_gen_cross_cov(x1, x2, &ProcessingPoint::zero(m1, m2), &w.w1, &w.w2)?;
    let diff = (tilted - &base) / delta;
    // First-order contribution of the exponential factor on the tilted side.
    let correction = if j == 1 {
        let w1v = &w.w1 * &vj; // rows scaled entrywise: W1 diag(v1)
        whitened_gen_cross_cov(x1, x2, &ProcessingPoint::zero(m1, m2), &w1v, &w.w2)?
    } else {
        let w2v = &w.w2 * &vj;
        whitened_gen_cross_cov(x1, x2, &ProcessingPoint::zero(m1, m2), &w.w1, &w2v)?
    };
    Ok(diff - correction)
}
