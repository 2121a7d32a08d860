//! End-to-end estimation: processing-point construction, target-set
//! assembly from generalized covariances or cumulant projections,
//! whitening, joint diagonalization (or the spectral shortcut), and
//! loading recovery with per-model post-processing.

use crate::error::{Error, Result};
use crate::linalg::{cond_2, frob, invert, pseudo_inverse, Matrix};
use crate::moments::{
    whitened_gen_cross_cov, whitened_t_projection, ProcessingPoint, S12Op,
};
use crate::nojd::{nojd_jdtm, spectral_diagonalizer, TargetSet};
use crate::view::ViewMatrix;
use crate::whitening::{compute_whitening_exact, compute_whitening_randomized, WhiteningPair};
use ndarray::{Array1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Which observation model the data follow; fixes the exponential
/// deflation pattern and the nonnegativity post-processing per view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelKind {
    /// Both views Poisson counts.
    Dcca,
    /// Both views continuous.
    Ncca,
    /// View 1 continuous, view 2 counts.
    Mcca,
}

impl ModelKind {
    fn view1_discrete(self) -> bool {
        matches!(self, ModelKind::Dcca)
    }
    fn view2_discrete(self) -> bool {
        matches!(self, ModelKind::Dcca | ModelKind::Mcca)
    }
}

/// Which target-matrix family drives the diagonalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    /// Whitened projections of the third-order corrected cumulant
    /// (count views only).
    Cumulant,
    /// Whitened generalized covariance matrices at several processing
    /// points.
    Gencov,
    /// Eigenvectors of a single generalized covariance target.
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WhiteningKind {
    Exact,
    Randomized,
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub model: ModelKind,
    pub method: Method,
    pub k: usize,
    /// Base processing-point scale.
    pub delta: f64,
    pub max_sweeps: usize,
    pub tol: f64,
    pub seed: u64,
    pub whitening: WhiteningKind,
}

impl FitConfig {
    pub fn new(model: ModelKind, method: Method, k: usize) -> Self {
        FitConfig {
            model,
            method,
            k,
            delta: 0.1,
            max_sweeps: 100,
            tol: 1e-10,
            seed: 0,
            whitening: WhiteningKind::Exact,
        }
    }
}

/// Recovered factor loading matrices, columns aligned across views.
#[derive(Debug, Clone)]
pub struct Loadings {
    /// M1 x K.
    pub d1: Matrix,
    /// M2 x K.
    pub d2: Matrix,
}

/// Run metadata for one fit.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub whitening_identity_err: f64,
    pub singular_values: Vec<f64>,
    pub sweeps: usize,
    pub final_off: f64,
    /// Per-sweep (off, normality) values from the diagonalizer.
    pub off_trace: Vec<(f64, f64)>,
    pub cond_q: f64,
    /// Processing points dropped for degenerate weights.
    pub dropped_points: usize,
    /// All non-identity targets were indistinguishable from multiples of
    /// the identity; the sources carry no usable non-Gaussian signal.
    pub degenerate_targets: bool,
    /// The diagonalizer hit the sweep limit without converging.
    pub stalled: bool,
    /// Imaginary-to-real mass ratio discarded by the spectral method.
    pub imag_mass: f64,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub loadings: Loadings,
    pub diagnostics: Diagnostics,
}

/// `W1 S12_hat W2'` with the unbiased estimator, assembled from K x N
/// panels; equals I_K by construction of the whitening pair.
pub fn whitened_s12_unbiased(
    x1: &ViewMatrix,
    x2: &ViewMatrix,
    w1: &Matrix,
    w2: &Matrix,
) -> Result<Matrix> {
    let n = x1.nsamples();
    if n < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: n });
    }
    let nf = n as f64;
    let a = x1.left_mul(w1);
    let b = x2.left_mul(w2);
    let ma = a.mean_axis(Axis(1)).unwrap();
    let mb = b.mean_axis(Axis(1)).unwrap();
    let cross = a.dot(&b.t());
    let outer = ma
        .view()
        .insert_axis(Axis(1))
        .dot(&mb.view().insert_axis(Axis(0)));
    Ok((cross - outer * nf) / (nf - 1.0))
}

/// Per-view processing-point scales delta_j = delta * N * M_j / sum |X_j|,
/// which normalize by the mean absolute entry of each view.
pub fn point_scales(x1: &ViewMatrix, x2: &ViewMatrix, delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let n = x1.nsamples();
    let scale = |x: &ViewMatrix, view: usize| -> Result<f64> {
        let total = x.sum_abs();
        if total <= 0.0 {
            return Err(Error::ZeroView(view));
        }
        Ok(delta * (n * x.nvars()) as f64 / total)
    };
    Ok((scale(x1, 1)?, scale(x2, 2)?))
}

/// The default processing points: t = 0 plus the K canonical whitened
/// directions per view, scaled by delta_j = delta * N * M_j / sum |X_j|.
pub fn build_processing_points(
    w: &WhiteningPair,
    x1: &ViewMatrix,
    x2: &ViewMatrix,
    delta: f64,
) -> Result<Vec<ProcessingPoint>> {
    let (m1, m2) = (x1.nvars(), x2.nvars());
    let (d1, d2) = point_scales(x1, x2, delta)?;
    let k = w.w1.nrows();
    let mut points = vec![ProcessingPoint::zero(m1, m2)];
    for p in 0..k {
        points.push(ProcessingPoint {
            t1: w.w1.row(p).to_owned() * d1,
            t2: Array1::zeros(m2),
        });
    }
    for p in 0..k {
        points.push(ProcessingPoint {
            t1: Array1::zeros(m1),
            t2: w.w2.row(p).to_owned() * d2,
        });
    }
    Ok(points)
}

/// Whitening rows with the model's exponential deflation folded in:
/// count views contribute diag(e^{-t}) on their side.
fn deflated_rows(w: &WhiteningPair, t: &ProcessingPoint, model: ModelKind) -> (Matrix, Matrix) {
    let w1 = if model.view1_discrete() {
        let scale = t.t1.mapv(|v| (-v).exp());
        &w.w1 * &scale
    } else {
        w.w1.clone()
    };
    let w2 = if model.view2_discrete() {
        let scale = t.t2.mapv(|v| (-v).exp());
        &w.w2 * &scale
    } else {
        w.w2.clone()
    };
    (w1, w2)
}

/// Whitened, deflated generalized covariance targets at the given points.
/// Points with degenerate weights are dropped (their count is returned);
/// at least two targets must survive.
pub fn build_targets_gencov(
    x1: &ViewMatrix,
    x2: &ViewMatrix,
    w: &WhiteningPair,
    points: &[ProcessingPoint],
    model: ModelKind,
) -> Result<(TargetSet, usize)> {
    let mut matrices = Vec::new();
    let mut labels = Vec::new();
    let mut dropped = 0;
    for (i, t) in points.iter().enumerate() {
        if t.is_zero() {
            matrices.push(whitened_s12_unbiased(x1, x2, &w.w1, &w.w2)?);
            labels.push("t0".to_string());
            continue;
        }
        let (w1_eff, w2_eff) = deflated_rows(w, t, model);
        match whitened_gen_cross_cov(x1, x2, t, &w1_eff, &w2_eff) {
            Ok(m) => {
                matrices.push(m);
                labels.push(format!("t{i}"));
            }
            Err(Error::DegenerateWeights) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    if matrices.len() < 2 {
        return Err(Error::InsufficientTargets(matrices.len()));
    }
    Ok((TargetSet::new(matrices, labels)?, dropped))
}

/// The 2K + 1 cumulant targets: the whitened covariance plus the whitened
/// third-cumulant projections along each canonical direction of each
/// view. Count data only.
pub fn build_targets_cumulant(
    x1: &ViewMatrix,
    x2: &ViewMatrix,
    w: &WhiteningPair,
) -> Result<TargetSet> {
    let k = w.w1.nrows();
    let mut matrices = vec![whitened_s12_unbiased(x1, x2, &w.w1, &w.w2)?];
    let mut labels = vec!["t0".to_string()];
    for j in [1usize, 2] {
        for p in 0..k {
            let mut u = Array1::zeros(k);
            u[p] = 1.0;
            matrices.push(whitened_t_projection(x1, x2, w, &u, j)?);
            labels.push(format!("cum:j{j}:e{p}"));
        }
    }
    Ok(TargetSet::new(matrices, labels)?)
}

/// True when every non-identity target is indistinguishable from a
/// multiple of I_K, so the diagonalization problem carries no signal
/// (the all-Gaussian degeneracy).
pub fn degenerate_targets(set: &TargetSet) -> bool {
    let k = set.size() as f64;
    let mut checked = 0;
    for (m, label) in set.matrices.iter().zip(&set.labels) {
        if label == "t0" {
            continue;
        }
        checked += 1;
        let trace: f64 = (0..set.size()).map(|i| m[[i, i]]).sum();
        let scaled_eye = Matrix::eye(set.size()) * (trace / k);
        let resid = frob(&(m - &scaled_eye));
        let denom = frob(m).max(1e-300);
        if resid / denom > 1e-6 {
            return false;
        }
    }
    checked > 0
}

/// Maps the diagonalizer back to loadings: D1 = W1^+ Q and D2 = W2^+
/// Q^{-T}, then per-view post-processing (count views: sign-flip columns
/// so positive mass dominates, truncate negatives) and column
/// l1-normalization.
pub fn recover_loadings(w: &WhiteningPair, q: &Matrix, model: ModelKind) -> Result<Loadings> {
    let qinv = invert(q).map_err(|_| Error::Singular("loading recovery".into()))?;
    recover_loadings_parts(w, q, &qinv.t().to_owned(), model)
}

/// Same as `recover_loadings` but with Q and Q^{-T} supplied separately,
/// for the spectral path where both are real parts of complex matrices
/// and the second is not the inverse transpose of the first.
pub fn recover_loadings_parts(
    w: &WhiteningPair,
    q: &Matrix,
    qinvt: &Matrix,
    model: ModelKind,
) -> Result<Loadings> {
    let mut d1 = pseudo_inverse(&w.w1).dot(q);
    let mut d2 = pseudo_inverse(&w.w2).dot(qinvt);
    let postprocess = |d: &mut Matrix, discrete: bool| {
        for mut col in d.columns_mut() {
            if discrete {
                let pos: f64 = col.iter().filter(|&&v| v > 0.0).map(|v| v * v).sum();
                let neg: f64 = col.iter().filter(|&&v| v < 0.0).map(|v| v * v).sum();
                if neg > pos {
                    col.mapv_inplace(|v| -v);
                }
                col.mapv_inplace(|v| v.max(0.0));
            }
            let norm: f64 = col.iter().map(|v| v.abs()).sum();
            if norm > 0.0 {
                col.mapv_inplace(|v| v / norm);
            }
        }
    };
    postprocess(&mut d1, model.view1_discrete());
    postprocess(&mut d2, model.view2_discrete());
    Ok(Loadings { d1, d2 })
}

fn validate(x1: &ViewMatrix, x2: &ViewMatrix, config: &FitConfig) -> Result<()> {
    let (m1, m2) = (x1.nvars(), x2.nvars());
    if x1.nsamples() != x2.nsamples() {
        return Err(Error::Dimension(format!(
            "views have {} and {} samples",
            x1.nsamples(),
            x2.nsamples()
        )));
    }
    if x1.nsamples() < 3 {
        return Err(Error::InsufficientSamples {
            need: 3,
            got: x1.nsamples(),
        });
    }
    if config.k == 0 || config.k > m1.min(m2) {
        return Err(Error::InvalidParameter(format!(
            "K = {} out of range for view sizes ({m1}, {m2})",
            config.k
        )));
    }
    if !(config.delta > 0.0 && config.delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive, got {}",
            config.delta
        )));
    }
    if config.method == Method::Cumulant && config.model != ModelKind::Dcca {
        return Err(Error::InvalidParameter(
            "the cumulant method requires count data in both views".into(),
        ));
    }
    Ok(())
}

/// A vector uniform on the unit sphere.
fn random_direction(k: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    loop {
        let v = Array1::from_shape_fn(k, |_| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let norm = v.dot(&v).sqrt();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// Full estimation pipeline; deterministic given `config.seed`.
pub fn fit(x1: &ViewMatrix, x2: &ViewMatrix, config: &FitConfig) -> Result<FitResult> {
    validate(x1, x2, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let w = match config.whitening {
        WhiteningKind::Exact => {
            let s12 = crate::moments::s12_hat(x1, x2).map_err(|e| e.at_stage("covariance"))?;
            compute_whitening_exact(&s12, config.k).map_err(|e| e.at_stage("whitening"))?
        }
        WhiteningKind::Randomized => {
            let op = S12Op::new(x1, x2).map_err(|e| e.at_stage("covariance"))?;
            let oversample = 10.min(x1.nvars().min(x2.nvars()) - config.k);
            compute_whitening_randomized(&op, config.k, oversample, &mut rng)
                .map_err(|e| e.at_stage("whitening"))?
        }
    };
    let whitening_identity_err = {
        let prod = whitened_s12_unbiased(x1, x2, &w.w1, &w.w2)?;
        frob(&(&prod - &Matrix::eye(config.k)))
    };

    let mut dropped_points = 0;
    if config.method == Method::Spectral {
        // One combined point t = (delta1 W1' u, delta2 W2' u) for a
        // random direction u on the sphere.
        let (d1, d2) = point_scales(x1, x2, config.delta)
            .map_err(|e| e.at_stage("processing-points"))?;
        let u = random_direction(config.k, &mut rng);
        let t = ProcessingPoint {
            t1: w.w1.t().dot(&u) * d1,
            t2: w.w2.t().dot(&u) * d2,
        };
        let (w1_eff, w2_eff) = deflated_rows(&w, &t, config.model);
        let b = whitened_gen_cross_cov(x1, x2, &t, &w1_eff, &w2_eff)
            .map_err(|e| e.at_stage("targets"))?;
        let set = TargetSet::new(vec![b.clone()], vec!["spectral".into()])?;
        let degenerate = degenerate_targets(&set);
        let sf = spectral_diagonalizer(&b).map_err(|e| e.at_stage("diagonalization"))?;
        let loadings = recover_loadings_parts(&w, &sf.q_re, &sf.qinvt_re, config.model)
            .map_err(|e| e.at_stage("recovery"))?;
        return Ok(FitResult {
            loadings,
            diagnostics: Diagnostics {
                whitening_identity_err,
                singular_values: w.singular_values.to_vec(),
                sweeps: 0,
                final_off: sf.final_off,
                off_trace: Vec::new(),
                cond_q: sf.cond,
                dropped_points,
                degenerate_targets: degenerate,
                stalled: false,
                imag_mass: sf.imag_ratio,
            },
        });
    }

    let (diag, degenerate) = match config.method {
        Method::Gencov => {
            let points = build_processing_points(&w, x1, x2, config.delta)
                .map_err(|e| e.at_stage("processing-points"))?;
            let (set, dropped) = build_targets_gencov(x1, x2, &w, &points, config.model)
                .map_err(|e| e.at_stage("targets"))?;
            dropped_points = dropped;
            let degenerate = degenerate_targets(&set);
            let d = nojd_jdtm(&set, config.max_sweeps, config.tol)
                .map_err(|e| e.at_stage("diagonalization"))?;
            (d, degenerate)
        }
        Method::Cumulant => {
            let set = build_targets_cumulant(x1, x2, &w).map_err(|e| e.at_stage("targets"))?;
            let degenerate = degenerate_targets(&set);
            let d = nojd_jdtm(&set, config.max_sweeps, config.tol)
                .map_err(|e| e.at_stage("diagonalization"))?;
            (d, degenerate)
        }
        Method::Spectral => unreachable!(),
    };

    let cond_q = cond_2(&diag.q);
    let loadings =
        recover_loadings(&w, &diag.q, config.model).map_err(|e| e.at_stage("recovery"))?;
    Ok(FitResult {
        loadings,
        diagnostics: Diagnostics {
            whitening_identity_err,
            singular_values: w.singular_values.to_vec(),
            sweeps: diag.sweeps_used,
            final_off: diag.final_off,
            off_trace: diag.trace,
            cond_q,
            dropped_points,
            degenerate_targets: degenerate,
            stalled: diag.stalled,
            imag_mass: 0.0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::stacked_l1_error;
    use crate::synthetic::{
        gen_discrete_instance, sample_continuous, sample_discrete, gen_continuous_instance,
        FactorMode,
    };
    use ndarray::array;

    /// Population diagonal of the gamma source generalized covariance:
    /// C(h)_kk = c / (b - h_k)^2, valid for h_k < b.
    fn gamma_gen_cov_diag(c: f64, b: f64, h: &Array1<f64>) -> Array1<f64> {
        h.mapv(|hk| {
            assert!(hk < b, "processing point outside the gamma domain");
            c / ((b - hk) * (b - hk))
        })
    }

    /// Analytic deflated population target D1 C(h(t)) D2' for a
    /// noise-free count model.
    fn population_target_dcca(
        d1: &Matrix,
        d2: &Matrix,
        c: f64,
        b: f64,
        t: &ProcessingPoint,
    ) -> Matrix {
        let h = d1.t().dot(&t.t1.mapv(|v| v.exp() - 1.0))
            + d2.t().dot(&t.t2.mapv(|v| v.exp() - 1.0));
        let diag = gamma_gen_cov_diag(c, b, &h);
        d1.dot(&Matrix::from_diag(&diag)).dot(&d2.t())
    }

    #[test]
    fn processing_point_scales() {
        let w = WhiteningPair {
            w1: Matrix::eye(2),
            w2: Matrix::eye(2),
            singular_values: Array1::ones(2),
        };
        // All-ones data: mean entry 1, so delta_j = delta.
        let x = ViewMatrix::Dense(Matrix::ones((2, 4)));
        let pts = build_processing_points(&w, &x, &x, 0.1).unwrap();
        assert_eq!(pts.len(), 5);
        assert!(pts[0].is_zero());
        assert!((pts[1].t1[0] - 0.1).abs() < 1e-15);
        // Mean entry 2 halves the scale.
        let x2 = ViewMatrix::Dense(Matrix::ones((2, 4)) * 2.0);
        let pts = build_processing_points(&w, &x2, &x2, 0.1).unwrap();
        assert!((pts[1].t1[0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn zero_view_rejected() {
        let w = WhiteningPair {
            w1: Matrix::eye(2),
            w2: Matrix::eye(2),
            singular_values: Array1::ones(2),
        };
        let x = ViewMatrix::Dense(Matrix::ones((2, 4)));
        let z = ViewMatrix::Dense(Matrix::zeros((2, 4)));
        assert!(matches!(
            build_processing_points(&w, &x, &z, 0.1),
            Err(Error::ZeroView(2))
        ));
    }

    #[test]
    fn gencov_first_target_is_identity() {
        let inst = gen_discrete_instance(
            5, 5, 2, 3, 3, 0.3, 0.1, 0.1, 100.0, 50.0, FactorMode::Dirichlet, 3,
        )
        .unwrap();
        let s = sample_discrete(&inst, 2000, 7).unwrap();
        let s12 = crate::moments::s12_hat(&s.x1, &s.x2).unwrap();
        let w = compute_whitening_exact(&s12, 2).unwrap();
        let pts = build_processing_points(&w, &s.x1, &s.x2, 0.1).unwrap();
        let (set, dropped) = build_targets_gencov(&s.x1, &s.x2, &w, &pts, ModelKind::Dcca).unwrap();
        assert_eq!(dropped, 0);
        assert!(frob(&(&set.matrices[0] - &Matrix::eye(2))) < 1e-8);
    }

    #[test]
    fn gencov_targets_approach_population_form() {
        // Noise-free count model at large N: the deflated whitened target
        // should be close to W1 D1 C(h) D2' W2'.
        let inst = gen_discrete_instance(
            4, 4, 2, 2, 2, 0.4, 0.1, 0.1, 200.0, 1e-6, FactorMode::Dirichlet, 11,
        )
        .unwrap();
        let s = sample_discrete(&inst, 100_000, 13).unwrap();
        let s12 = crate::moments::s12_hat(&s.x1, &s.x2).unwrap();
        let w = compute_whitening_exact(&s12, 2).unwrap();
        let pts = build_processing_points(&w, &s.x1, &s.x2, 0.1).unwrap();
        let (set, _) = build_targets_gencov(&s.x1, &s.x2, &w, &pts, ModelKind::Dcca).unwrap();
        for (m, label) in set.matrices.iter().zip(&set.labels).skip(1) {
            let idx: usize = label[1..].parse().unwrap();
            let pop = population_target_dcca(&inst.d1, &inst.d2, inst.c, inst.b, &pts[idx]);
            let want = w.w1.dot(&pop).dot(&w.w2.t());
            let rel = frob(&(m - &want)) / frob(&want);
            assert!(rel < 0.25, "target {label} relative error {rel}");
        }
    }

    #[test]
    fn cumulant_target_count() {
        let inst = gen_discrete_instance(
            5, 5, 2, 3, 3, 0.3, 0.1, 0.1, 100.0, 50.0, FactorMode::Dirichlet, 17,
        )
        .unwrap();
        let s = sample_discrete(&inst, 500, 19).unwrap();
        let s12 = crate::moments::s12_hat(&s.x1, &s.x2).unwrap();
        let w = compute_whitening_exact(&s12, 2).unwrap();
        let set = build_targets_cumulant(&s.x1, &s.x2, &w).unwrap();
        assert_eq!(set.matrices.len(), 5);
        assert!(frob(&(&set.matrices[0] - &Matrix::eye(2))) < 1e-8);
    }

    /// Construct analytic population matrices for a noise-free gamma
    /// count model and run whitening + diagonalization + recovery.
    fn population_recovery(c: f64, b: f64, d1: &Matrix, d2: &Matrix, k: usize) -> (Loadings, bool) {
        let var = c / (b * b);
        let s12 = d1.dot(&(d2 * var).t());
        let w = compute_whitening_exact(&s12, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut matrices = vec![w.w1.dot(&s12).dot(&w.w2.t())];
        let mut labels = vec!["t0".to_string()];
        for i in 0..(2 * k) {
            let t1 = Array1::from_shape_fn(d1.nrows(), |_| rng.gen_range(-0.5..0.5)) * b;
            let h = d1.t().dot(&t1.mapv(|v: f64| v.exp() - 1.0));
            let diag = gamma_gen_cov_diag(c, b, &h);
            let pop = d1.dot(&Matrix::from_diag(&diag)).dot(&d2.t());
            matrices.push(w.w1.dot(&pop).dot(&w.w2.t()));
            labels.push(format!("t{}", i + 1));
        }
        let set = TargetSet::new(matrices, labels).unwrap();
        let degenerate = degenerate_targets(&set);
        let d = nojd_jdtm(&set, 100, 1e-14).unwrap();
        (recover_loadings(&w, &d.q, ModelKind::Dcca).unwrap(), degenerate)
    }

    #[test]
    fn noiseless_population_recovery() {
        let d1 = array![[0.7, 0.1], [0.2, 0.3], [0.1, 0.6]];
        let d2 = array![[0.5, 0.2], [0.1, 0.5], [0.4, 0.3]];
        let (loadings, degenerate) = population_recovery(0.3, 0.01, &d1, &d2, 2);
        assert!(!degenerate);
        let m = stacked_l1_error(&loadings.d1, &loadings.d2, &d1, &d2, false).unwrap();
        assert!(m.error < 1e-6, "recovery error {}", m.error);
    }

    #[test]
    fn recover_loadings_flips_negative_columns() {
        let w = WhiteningPair {
            w1: Matrix::eye(2),
            w2: Matrix::eye(2),
            singular_values: Array1::ones(2),
        };
        // Q chosen so W1^+ Q has an all-negative column.
        let q = array![[-0.5, 0.0], [-0.5, 1.0]];
        let l = recover_loadings(&w, &q, ModelKind::Dcca).unwrap();
        assert!(l.d1.column(0).iter().all(|&v| v >= 0.0));
        assert!((l.d1.column(0).sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_seed_determinism() {
        let inst = gen_discrete_instance(
            5, 5, 2, 3, 3, 0.3, 0.1, 0.1, 100.0, 50.0, FactorMode::Dirichlet, 23,
        )
        .unwrap();
        let s = sample_discrete(&inst, 800, 29).unwrap();
        let mut config = FitConfig::new(ModelKind::Dcca, Method::Gencov, 2);
        config.seed = 5;
        let a = fit(&s.x1, &s.x2, &config).unwrap();
        let b = fit(&s.x1, &s.x2, &config).unwrap();
        assert_eq!(a.loadings.d1, b.loadings.d1);
        assert_eq!(a.loadings.d2, b.loadings.d2);
    }

    #[test]
    fn fit_whitening_identity_always_small() {
        let inst = gen_discrete_instance(
            6, 6, 3, 3, 3, 0.3, 0.1, 0.1, 100.0, 50.0, FactorMode::Dirichlet, 31,
        )
        .unwrap();
        let s = sample_discrete(&inst, 1000, 37).unwrap();
        for method in [Method::Gencov, Method::Cumulant, Method::Spectral] {
            let config = FitConfig::new(ModelKind::Dcca, method, 3);
            let r = fit(&s.x1, &s.x2, &config).unwrap();
            assert!(
                r.diagnostics.whitening_identity_err < 1e-8,
                "{method:?}: {}",
                r.diagnostics.whitening_identity_err
            );
        }
    }

    #[test]
    fn fit_validation_errors() {
        let x = ViewMatrix::Dense(Matrix::ones((3, 10)));
        let z = ViewMatrix::Dense(Matrix::zeros((3, 10)));
        let config = FitConfig::new(ModelKind::Dcca, Method::Gencov, 2);
        // An all-zero view cannot support a rank-2 whitening.
        assert!(fit(&x, &z, &config).is_err());
        // Cumulant method on a continuous model is a validation error.
        let bad = FitConfig::new(ModelKind::Ncca, Method::Cumulant, 2);
        assert!(fit(&x, &x, &bad).unwrap_err().is_validation());
        // K larger than the view dimension.
        let big = FitConfig::new(ModelKind::Dcca, Method::Gencov, 9);
        assert!(fit(&x, &x, &big).unwrap_err().is_validation());
    }

    #[test]
    fn fit_continuous_end_to_end_improves_with_n() {
        let inst = gen_continuous_instance(8, 8, 2, 8, 8, 0.2, 0.1, 0.1, 100.0, 100.0, 41).unwrap();
        let mut medians = Vec::new();
        for n in [400usize, 25_600] {
            let mut errs: Vec<f64> = (0..5)
                .map(|trial| {
                    let s = sample_continuous(&inst, n, 43 + trial).unwrap();
                    let mut config = FitConfig::new(ModelKind::Ncca, Method::Gencov, 2);
                    // Larger tilt: with identical source laws the targets
                    // separate components only at O(delta).
                    config.delta = 0.3;
                    let r = fit(&s.x1, &s.x2, &config).unwrap();
                    stacked_l1_error(&r.loadings.d1, &r.loadings.d2, &inst.d1, &inst.d2, true)
                        .unwrap()
                        .error
                })
                .collect();
            errs.sort_by(f64::total_cmp);
            medians.push(errs[2]);
        }
        assert!(
            medians[1] < medians[0],
            "median error did not improve: {medians:?}"
        );
    }
}
