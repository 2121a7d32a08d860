//! Recovery-error metric: normalized ℓ1 distance between column sets under
//! the best column matching, found exactly with the Hungarian algorithm.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Outcome of matching recovered columns against reference columns.
#[derive(Debug, Clone)]
pub struct MatchResult {
    /// Mean matched column ℓ1 distance, halved; in [0, 1].
    pub error: f64,
    /// `permutation[k]` is the recovered column assigned to reference
    /// column `k`.
    pub permutation: Vec<usize>,
    /// Sign applied to each matched recovered column (all +1 unless sign
    /// matching was requested).
    pub signs: Vec<f64>,
}

/// Columns scaled to unit ℓ1 norm; zero columns are left as they are.
fn l1_normalize_columns(a: &Matrix) -> Matrix {
    let mut out = a.clone();
    for mut col in out.columns_mut() {
        let norm: f64 = col.iter().map(|x| x.abs()).sum();
        if norm > 0.0 {
            col.mapv_inplace(|x| x / norm);
        }
    }
    out
}

/// Minimum over column permutations (and optionally per-column signs) of
/// the mean ℓ1 column distance, divided by 2 so the value lies in [0, 1].
/// Inputs are ℓ1-normalized internally.
pub fn l1_error(d_hat: &Matrix, d_true: &Matrix, allow_sign: bool) -> Result<MatchResult> {
    if d_hat.dim() != d_true.dim() {
        return Err(Error::Dimension(format!(
            "shape mismatch: {:?} vs {:?}",
            d_hat.dim(),
            d_true.dim()
        )));
    }
    let k = d_true.ncols();
    if k == 0 {
        return Err(Error::Dimension("no columns to match".into()));
    }
    let hat = l1_normalize_columns(d_hat);
    let truth = l1_normalize_columns(d_true);

    // cost[k][k'] = distance of recovered column k' to reference column k.
    let mut cost = Matrix::zeros((k, k));
    let mut best_sign = Matrix::ones((k, k));
    for kt in 0..k {
        for kh in 0..k {
            let plus: f64 = hat
                .column(kh)
                .iter()
                .zip(truth.column(kt))
                .map(|(h, t)| (h - t).abs())
                .sum();
            if allow_sign {
                let minus: f64 = hat
                    .column(kh)
                    .iter()
                    .zip(truth.column(kt))
                    .map(|(h, t)| (-h - t).abs())
                    .sum();
                if minus < plus {
                    cost[[kt, kh]] = minus;
                    best_sign[[kt, kh]] = -1.0;
                } else {
                    cost[[kt, kh]] = plus;
                }
            } else {
                cost[[kt, kh]] = plus;
            }
        }
    }

    let permutation = hungarian(&cost);
    let total: f64 = (0..k).map(|kt| cost[[kt, permutation[kt]]]).sum();
    let signs = (0..k).map(|kt| best_sign[[kt, permutation[kt]]]).collect();
    Ok(MatchResult {
        error: total / (2.0 * k as f64),
        permutation,
        signs,
    })
}

/// Exact minimum-cost assignment (Jonker-Volgenant shortest augmenting
/// path, O(n^3)). Returns `assignment[row] = column`.
pub fn hungarian(cost: &Matrix) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "hungarian needs a square cost matrix");
    // Potentials and matching arrays are 1-indexed with a virtual row/col 0.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1]; // p[col] = row matched to col
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Matches the vertical stack [D1; D2] against the stacked truth, so both
/// views share one column permutation.
pub fn stacked_l1_error(
    d1_hat: &Matrix,
    d2_hat: &Matrix,
    d1_true: &Matrix,
    d2_true: &Matrix,
    allow_sign: bool,
) -> Result<MatchResult> {
    let stack = |top: &Matrix, bottom: &Matrix| -> Result<Matrix> {
        if top.ncols() != bottom.ncols() {
            return Err(Error::Dimension(format!(
                "column counts differ: {} vs {}",
                top.ncols(),
                bottom.ncols()
            )));
        }
        let mut out = Matrix::zeros((top.nrows() + bottom.nrows(), top.ncols()));
        out.slice_mut(ndarray::s![..top.nrows(), ..]).assign(top);
        out.slice_mut(ndarray::s![top.nrows().., ..]).assign(bottom);
        Ok(out)
    };
    // Each view is normalized before stacking so both contribute equally.
    let hat = stack(&l1_normalize_columns(d1_hat), &l1_normalize_columns(d2_hat))?;
    let truth = stack(
        &l1_normalize_columns(d1_true),
        &l1_normalize_columns(d2_true),
    )?;
    l1_error(&hat, &truth, allow_sign)
}
