//! Ground-truth generators for the discrete and continuous synthetic
//! experiments: gamma-distributed sources and noises, Poisson count views
//! (discrete) or linear views with Rademacher-signed gamma sources
//! (continuous), with factor columns drawn from a symmetric Dirichlet or
//! fixed to the reference 2D configuration.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::view::ViewMatrix;
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};

/// How discrete factor matrices are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorMode {
    /// Every factor column drawn from Dirichlet(0.5 * 1).
    Dirichlet,
    /// The fixed 2-variable, 1-source reference configuration.
    Fixed2d,
}

/// Parameters of a discrete count-model instance. Gamma rates are tied to
/// the expected sample lengths: b = K c / Ls and b_j = K_j c_j / Ln.
#[derive(Debug, Clone)]
pub struct DiscreteInstance {
    pub d1: Matrix,
    pub d2: Matrix,
    pub f1: Matrix,
    pub f2: Matrix,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub b: f64,
    pub b1: f64,
    pub b2: f64,
    pub ls: f64,
    pub ln: f64,
}

/// Parameters of a continuous instance: same latent structure, factor
/// entries uniform on [-1, 1] with l1-normalized columns, sources and
/// noises sign-symmetrized by independent Rademacher variables.
#[derive(Debug, Clone)]
pub struct ContinuousInstance {
    pub d1: Matrix,
    pub d2: Matrix,
    pub f1: Matrix,
    pub f2: Matrix,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub b: f64,
    pub b1: f64,
    pub b2: f64,
}

/// Observations plus the latent draws that generated them, for
/// conditioning oracles in tests.
#[derive(Debug, Clone)]
pub struct SamplePanels {
    pub x1: ViewMatrix,
    pub x2: ViewMatrix,
    /// K x N source draws.
    pub alpha: Matrix,
    /// K1 x N and K2 x N noise draws.
    pub beta1: Matrix,
    pub beta2: Matrix,
}

fn check_positive(params: &[(&str, f64)]) -> Result<()> {
    for &(name, v) in params {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// One Dirichlet(0.5 * 1) column via normalized gamma draws.
fn dirichlet_column(m: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    let g = Gamma::new(0.5, 1.0).expect("valid gamma");
    loop {
        let mut col = Array1::from_shape_fn(m, |_| g.sample(rng));
        let sum = col.sum();
        if sum > 0.0 {
            col /= sum;
            return col;
        }
    }
}

fn dirichlet_matrix(m: usize, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut out = Matrix::zeros((m, k));
    for j in 0..k {
        out.column_mut(j).assign(&dirichlet_column(m, rng));
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn gen_discrete_instance(
    m1: usize,
    m2: usize,
    k: usize,
    k1: usize,
    k2: usize,
    c: f64,
    c1: f64,
    c2: f64,
    ls: f64,
    ln: f64,
    mode: FactorMode,
    seed: u64,
) -> Result<DiscreteInstance> {
    check_positive(&[("c", c), ("c1", c1), ("c2", c2), ("Ls", ls), ("Ln", ln)])?;
    if m1 == 0 || m2 == 0 || k == 0 || k1 == 0 || k2 == 0 {
        return Err(Error::InvalidParameter("all dimensions must be positive".into()));
    }
    let (d1, d2, f1, f2) = match mode {
        FactorMode::Fixed2d => {
            if !(m1 == 2 && m2 == 2 && k1 == 2 && k2 == 2 && k == 1) {
                return Err(Error::InvalidParameter(
                    "fixed2d mode requires M1 = M2 = K1 = K2 = 2 and K = 1".into(),
                ));
            }
            let d = Matrix::from_shape_vec((2, 1), vec![0.5, 0.5]).unwrap();
            let f = Matrix::from_shape_vec((2, 2), vec![0.9, 0.1, 0.1, 0.9]).unwrap();
            (d.clone(), d, f.clone(), f)
        }
        FactorMode::Dirichlet => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (
                dirichlet_matrix(m1, k, &mut rng),
                dirichlet_matrix(m2, k, &mut rng),
                dirichlet_matrix(m1, k1, &mut rng),
                dirichlet_matrix(m2, k2, &mut rng),
            )
        }
    };
    Ok(DiscreteInstance {
        d1,
        d2,
        f1,
        f2,
        c,
        c1,
        c2,
        b: k as f64 * c / ls,
        b1: k1 as f64 * c1 / ln,
        b2: k2 as f64 * c2 / ln,
        ls,
        ln,
    })
}

/// Poisson draw that tolerates a zero mean.
fn poisson_count(lambda: f64, rng: &mut ChaCha8Rng) -> f64 {
    if lambda <= 0.0 {
        0.0
    } else {
        Poisson::new(lambda).expect("positive mean").sample(rng)
    }
}

/// Gamma draws with shape `c` and rate `b`, one per (row, sample).
fn gamma_panel(rows: usize, n: usize, c: f64, b: f64, rng: &mut ChaCha8Rng) -> Matrix {
    let g = Gamma::new(c, 1.0 / b).expect("valid gamma");
    Matrix::from_shape_fn((rows, n), |_| g.sample(rng))
}

/// Samples N observations of both count views along with all latents.
pub fn sample_discrete(inst: &DiscreteInstance, n: usize, seed: u64) -> Result<SamplePanels> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = inst.d1.ncols();
    let alpha = gamma_panel(k, n, inst.c, inst.b, &mut rng);
    let beta1 = gamma_panel(inst.f1.ncols(), n, inst.c1, inst.b1, &mut rng);
    let beta2 = gamma_panel(inst.f2.ncols(), n, inst.c2, inst.b2, &mut rng);
    let mean1 = inst.d1.dot(&alpha) + inst.f1.dot(&beta1);
    let mean2 = inst.d2.dot(&alpha) + inst.f2.dot(&beta2);
    let draw = |mean: &Matrix, rng: &mut ChaCha8Rng| -> Result<ViewMatrix> {
        let (m, _) = mean.dim();
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut col = Vec::new();
            for i in 0..m {
                let v = poisson_count(mean[[i, j]], rng);
                if v > 0.0 {
                    col.push((i, v));
                }
            }
            cols.push(col);
        }
        ViewMatrix::sparse(m, n, cols)
    };
    let x1 = draw(&mean1, &mut rng)?;
    let x2 = draw(&mean2, &mut rng)?;
    Ok(SamplePanels {
        x1,
        x2,
        alpha,
        beta1,
        beta2,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn gen_continuous_instance(
    m1: usize,
    m2: usize,
    k: usize,
    k1: usize,
    k2: usize,
    c: f64,
    c1: f64,
    c2: f64,
    ls: f64,
    ln: f64,
    seed: u64,
) -> Result<ContinuousInstance> {
    check_positive(&[("c", c), ("c1", c1), ("c2", c2), ("Ls", ls), ("Ln", ln)])?;
    if m1 == 0 || m2 == 0 || k == 0 || k1 == 0 || k2 == 0 {
        return Err(Error::InvalidParameter("all dimensions must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform_l1 = |m: usize, cols: usize| -> Matrix {
        let mut out = Matrix::from_shape_fn((m, cols), |_| rng.gen_range(-1.0..1.0));
        for mut col in out.columns_mut() {
            let norm: f64 = col.iter().map(|x| x.abs()).sum();
            if norm > 0.0 {
                col.mapv_inplace(|x| x / norm);
            }
        }
        out
    };
    Ok(ContinuousInstance {
        d1: uniform_l1(m1, k),
        d2: uniform_l1(m2, k),
        f1: uniform_l1(m1, k1),
        f2: uniform_l1(m2, k2),
        c,
        c1,
        c2,
        b: k as f64 * c / ls,
        b1: k1 as f64 * c1 / ln,
        b2: k2 as f64 * c2 / ln,
    })
}

/// Gamma magnitudes multiplied by independent Rademacher signs.
fn signed_gamma_panel(rows: usize, n: usize, c: f64, b: f64, rng: &mut ChaCha8Rng) -> Matrix {
    let g = Gamma::new(c, 1.0 / b).expect("valid gamma");
    Matrix::from_shape_fn((rows, n), |_| {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        sign * g.sample(rng)
    })
}

/// Samples N observations of both continuous views along with all
/// latents.
pub fn sample_continuous(inst: &ContinuousInstance, n: usize, seed: u64) -> Result<SamplePanels> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = inst.d1.ncols();
    let alpha = signed_gamma_panel(k, n, inst.c, inst.b, &mut rng);
    let beta1 = signed_gamma_panel(inst.f1.ncols(), n, inst.c1, inst.b1, &mut rng);
    let beta2 = signed_gamma_panel(inst.f2.ncols(), n, inst.c2, inst.b2, &mut rng);
    let x1 = ViewMatrix::Dense(inst.d1.dot(&alpha) + inst.f1.dot(&beta1));
    let x2 = ViewMatrix::Dense(inst.d2.dot(&alpha) + inst.f2.dot(&beta2));
    Ok(SamplePanels {
        x1,
        x2,
        alpha,
        beta1,
        beta2,
    })
}
