//! Sample container for one view: an M x N matrix whose columns are
//! observations. Count data can be held sparsely as per-column nonzero
//! lists; all estimator kernels consume either layout through the same
//! interface without densifying.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use ndarray::{Array1, Array2};

/// One view of the paired sample, variables on rows and observations on
/// columns.
#[derive(Debug, Clone)]
pub enum ViewMatrix {
    Dense(Array2<f64>),
    /// Nonnegative integer counts; `cols[n]` lists `(row, value)` pairs of
    /// observation `n`, sorted by row.
    Sparse {
        m: usize,
        n: usize,
        cols: Vec<Vec<(usize, f64)>>,
    },
}

impl ViewMatrix {
    /// Builds a sparse view from per-column nonzeros, validating that every
    /// value is a nonnegative integer count in range.
    pub fn sparse(m: usize, n: usize, cols: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if cols.len() != n {
            return Err(Error::Dimension(format!(
                "expected {n} columns, got {}",
                cols.len()
            )));
        }
        for (j, col) in cols.iter().enumerate() {
            let mut last: Option<usize> = None;
            for &(row, val) in col {
                if row >= m {
                    return Err(Error::Dimension(format!(
                        "row {row} out of range in sparse column {j} (m = {m})"
                    )));
                }
                if let Some(prev) = last {
                    if row <= prev {
                        return Err(Error::Dimension(format!(
                            "sparse column {j} is not sorted by row"
                        )));
                    }
                }
                last = Some(row);
                if !(val.is_finite() && val >= 0.0 && val.fract() == 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "sparse count at ({row}, {j}) is {val}; counts must be nonnegative integers"
                    )));
                }
            }
        }
        Ok(ViewMatrix::Sparse { m, n, cols })
    }

    /// Number of variables (rows).
    pub fn nvars(&self) -> usize {
        match self {
            ViewMatrix::Dense(a) => a.nrows(),
            ViewMatrix::Sparse { m, .. } => *m,
        }
    }

    /// Number of observations (columns).
    pub fn nsamples(&self) -> usize {
        match self {
            ViewMatrix::Dense(a) => a.ncols(),
            ViewMatrix::Sparse { n, .. } => *n,
        }
    }

    /// Inner product of observation `j` with a length-M vector.
    pub fn col_dot(&self, j: usize, v: &Array1<f64>) -> f64 {
        match self {
            ViewMatrix::Dense(a) => a.column(j).dot(v),
            ViewMatrix::Sparse { cols, .. } => {
                cols[j].iter().map(|&(row, val)| val * v[row]).sum()
            }
        }
    }

    /// `W * X`: projects every observation through the K x M matrix `w`,
    /// producing a K x N matrix.
    pub fn left_mul(&self, w: &Matrix) -> Matrix {
        match self {
            ViewMatrix::Dense(a) => w.dot(a),
            ViewMatrix::Sparse { n, cols, .. } => {
                let k = w.nrows();
                let mut out = Matrix::zeros((k, *n));
                for (j, col) in cols.iter().enumerate() {
                    for &(row, val) in col {
                        for i in 0..k {
                            out[[i, j]] += w[[i, row]] * val;
                        }
                    }
                }
                out
            }
        }
    }

    /// `W * diag(scale) * X` without forming the scaled matrix.
    pub fn left_mul_scaled(&self, w: &Matrix, scale: &Array1<f64>) -> Matrix {
        match self {
            ViewMatrix::Dense(a) => {
                let ws = w * scale;
                ws.dot(a)
            }
            ViewMatrix::Sparse { n, cols, .. } => {
                let k = w.nrows();
                let mut out = Matrix::zeros((k, *n));
                for (j, col) in cols.iter().enumerate() {
                    for &(row, val) in col {
                        let sv = scale[row] * val;
                        for i in 0..k {
                            out[[i, j]] += w[[i, row]] * sv;
                        }
                    }
                }
                out
            }
        }
    }

    /// Calls `f(row, value)` for every stored entry of column `j` (dense
    /// storage visits all rows, including zeros).
    pub fn fold_col<F: FnMut(usize, f64)>(&self, j: usize, mut f: F) {
        match self {
            ViewMatrix::Dense(a) => {
                for (row, &val) in a.column(j).iter().enumerate() {
                    f(row, val);
                }
            }
            ViewMatrix::Sparse { cols, .. } => {
                for &(row, val) in &cols[j] {
                    f(row, val);
                }
            }
        }
    }

    /// `X * Y` for an N x C right factor, producing M x C.
    pub fn mul_right(&self, y: &Matrix) -> Matrix {
        match self {
            ViewMatrix::Dense(a) => a.dot(y),
            ViewMatrix::Sparse { m, cols, .. } => {
                let c = y.ncols();
                let mut out = Matrix::zeros((*m, c));
                for (j, col) in cols.iter().enumerate() {
                    for &(row, val) in col {
                        for cc in 0..c {
                            out[[row, cc]] += val * y[[j, cc]];
                        }
                    }
                }
                out
            }
        }
    }

    /// `X^T * Y` for an M x C factor, producing N x C.
    pub fn mul_left_t(&self, y: &Matrix) -> Matrix {
        match self {
            ViewMatrix::Dense(a) => a.t().dot(y),
            ViewMatrix::Sparse { n, cols, .. } => {
                let c = y.ncols();
                let mut out = Matrix::zeros((*n, c));
                for (j, col) in cols.iter().enumerate() {
                    for &(row, val) in col {
                        for cc in 0..c {
                            out[[j, cc]] += val * y[[row, cc]];
                        }
                    }
                }
                out
            }
        }
    }

    /// `X^T v` as a length-N vector of per-observation inner products.
    pub fn matvec_t(&self, v: &Array1<f64>) -> Array1<f64> {
        let n = self.nsamples();
        Array1::from_shape_fn(n, |j| self.col_dot(j, v))
    }

    /// Per-variable sample mean over observations.
    pub fn mean(&self) -> Array1<f64> {
        match self {
            ViewMatrix::Dense(a) => {
                let n = a.ncols().max(1) as f64;
                a.sum_axis(ndarray::Axis(1)) / n
            }
            ViewMatrix::Sparse { m, n, cols } => {
                let mut acc = Array1::zeros(*m);
                for col in cols {
                    for &(row, val) in col {
                        acc[row] += val;
                    }
                }
                acc / (*n).max(1) as f64
            }
        }
    }

    /// Sum of absolute values over all entries.
    pub fn sum_abs(&self) -> f64 {
        match self {
            ViewMatrix::Dense(a) => a.iter().map(|x| x.abs()).sum(),
            ViewMatrix::Sparse { cols, .. } => cols
                .iter()
                .flat_map(|c| c.iter())
                .map(|&(_, val)| val.abs())
                .sum(),
        }
    }

    /// Materializes the dense M x N matrix.
    pub fn to_dense(&self) -> Matrix {
        match self {
            ViewMatrix::Dense(a) => a.clone(),
            ViewMatrix::Sparse { m, n, cols } => {
                let mut out = Matrix::zeros((*m, *n));
                for (j, col) in cols.iter().enumerate() {
                    for &(row, val) in col {
                        out[[row, j]] = val;
                    }
                }
                out
            }
        }
    }
}
