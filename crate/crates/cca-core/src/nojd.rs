//! Non-orthogonal joint diagonalization by similarity: Jacobi-style sweeps
//! over pivot pairs, each applying a hyperbolic shear (reducing the
//! normality surrogate) followed by a Givens rotation (reducing the
//! off-diagonal mass), accumulating an invertible Q with
//! Q^{-1} A_p Q jointly near-diagonal. Also the one-matrix spectral
//! shortcut via the eigenvector matrix.

use crate::error::{Error, Result};
use crate::linalg::{cond_2, eig_nonsymmetric, Matrix};

/// The matrices to be jointly diagonalized, with a provenance label each.
#[derive(Debug, Clone)]
pub struct TargetSet {
    pub matrices: Vec<Matrix>,
    pub labels: Vec<String>,
}

impl TargetSet {
    pub fn new(matrices: Vec<Matrix>, labels: Vec<String>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::InsufficientTargets(0));
        }
        let k = matrices[0].nrows();
        for m in &matrices {
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::Dimension(format!(
                    "target matrices must all be {k}x{k}, found {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(
                    "target matrix contains non-finite entries".into(),
                ));
            }
        }
        if labels.len() != matrices.len() {
            return Err(Error::Dimension(format!(
                "{} labels for {} matrices",
                labels.len(),
                matrices.len()
            )));
        }
        Ok(TargetSet { matrices, labels })
    }

    pub fn size(&self) -> usize {
        self.matrices[0].nrows()
    }
}

/// Result of a joint diagonalization run.
#[derive(Debug, Clone)]
pub struct Diagonalizer {
    /// Invertible K x K matrix; Q^{-1} A_p Q is near-diagonal.
    pub q: Matrix,
    pub sweeps_used: usize,
    /// Off-diagonal mass of the transformed set at the returned Q.
    pub final_off: f64,
    /// Per-sweep (off, normality) values.
    pub trace: Vec<(f64, f64)>,
    /// True when the sweep limit was reached without the relative
    /// off-decrease dropping below tolerance; `q` is then the best seen.
    pub stalled: bool,
}

/// Sum of squared off-diagonal entries over the set.
pub fn off_measure(s: &TargetSet) -> f64 {
    let k = s.size();
    let mut acc = 0.0;
    for m in &s.matrices {
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    acc += m[[i, j]] * m[[i, j]];
                }
            }
        }
    }
    acc
}

/// Sum of squared Frobenius norms over the set; invariant under the
/// rotation updates, reduced (in surrogate) by the shear updates.
pub fn normality_measure(s: &TargetSet) -> f64 {
    s.matrices.iter().map(|m| m.iter().map(|v| v * v).sum::<f64>()).sum()
}

/// The pivot-plane entries of one matrix: (a, b, g, d) = (A_pp, A_pq,
/// A_qp, A_qq).
fn plane(m: &Matrix, p: usize, q: usize) -> (f64, f64, f64, f64) {
    (m[[p, p]], m[[p, q]], m[[q, p]], m[[q, q]])
}

/// Rotation angle minimizing the off-diagonal mass of the set restricted
/// to the (p, q) plane. Under a plane rotation the difference b' - g' is
/// invariant and b' + g' = cos(2t)(b + g) + sin(2t)(a - d), so the optimum
/// aligns (cos 2t, sin 2t) with the minor axis of the 2x2 Gram matrix of
/// the per-matrix vectors [a - d, b + g].
pub fn optimal_givens_angle(s: &TargetSet, p: usize, q: usize) -> f64 {
    let (mut g11, mut g12, mut g22) = (0.0, 0.0, 0.0);
    for m in &s.matrices {
        let (a, b, g, d) = plane(m, p, q);
        let e = a - d;
        let u = b + g;
        g11 += e * e;
        g12 += e * u;
        g22 += u * u;
    }
    if g11 + g22 <= 0.0 {
        return 0.0;
    }
    // Dominant eigenvector (x, y) of [[g11, g12], [g12, g22]].
    let half_diff = (g11 - g22) / 2.0;
    let lambda = (g11 + g22) / 2.0 + (half_diff * half_diff + g12 * g12).sqrt();
    let (mut x, mut y) = if (lambda - g11).abs() > (lambda - g22).abs() {
        (g12, lambda - g11)
    } else {
        (lambda - g22, g12)
    };
    let norm = (x * x + y * y).sqrt();
    if norm <= 0.0 {
        return 0.0;
    }
    if x < 0.0 {
        x = -x;
        y = -y;
    }
    0.5 * (-y).atan2(x)
}

/// The JDTM shear surrogate at tanh(y) = tau: the two pivot-plane
/// off-diagonal squares summed over the set.
fn shear_surrogate(p0: f64, p1: f64, p2: f64, tau: f64) -> f64 {
    let t2 = tau * tau;
    let denom = (1.0 - t2) * (1.0 - t2);
    (p0 * (1.0 + t2 * t2) + p1 * (tau + tau * t2) + p2 * t2) / denom
}

/// Shear parameter y* minimizing the two-entry surrogate
/// sum over matrices of (a'_pq)^2 + (a'_qp)^2, clamped to |y*| <= y_max.
/// In tau = tanh(y) the stationarity condition is the palindromic quartic
/// p1 t^4 + (4p0+2p2) t^3 + 6 p1 t^2 + (4p0+2p2) t + p1 = 0, which reduces
/// to a quadratic in s = t + 1/t; only roots inside the unit disk matter.
/// The surrogate at the returned y never exceeds its value at y = 0.
pub fn optimal_shear(s: &TargetSet, p: usize, q: usize, y_max: f64) -> f64 {
    let (mut p0, mut p1, mut p2) = (0.0, 0.0, 0.0);
    for m in &s.matrices {
        let (a, b, g, d) = plane(m, p, q);
        let e = a - d;
        p0 += b * b + g * g;
        p1 += 2.0 * e * (b - g);
        p2 += 2.0 * e * e - 4.0 * b * g;
    }
    let tau_cap = y_max.tanh().min(0.99);
    let mut candidates = vec![0.0, tau_cap, -tau_cap];
    if p1.abs() > 1e-300 {
        let a2 = p1;
        let b2 = 4.0 * p0 + 2.0 * p2;
        let c2 = 4.0 * p1;
        let disc = b2 * b2 - 4.0 * a2 * c2;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for sroot in [(-b2 + sq) / (2.0 * a2), (-b2 - sq) / (2.0 * a2)] {
                if sroot.is_finite() && sroot * sroot >= 4.0 {
                    // tau + 1/tau = s; the root inside the unit disk.
                    let tau = (sroot - sroot.signum() * (sroot * sroot - 4.0).sqrt()) / 2.0;
                    if tau.abs() < tau_cap {
                        candidates.push(tau);
                    }
                }
            }
        }
    }
    let f0 = shear_surrogate(p0, p1, p2, 0.0);
    let mut best_tau = 0.0;
    let mut best_val = f0;
    for &tau in &candidates {
        let val = shear_surrogate(p0, p1, p2, tau);
        if val < best_val {
            best_val = val;
            best_tau = tau;
        }
    }
    best_tau.atanh()
}

/// Applies the plane shear A <- S^{-1} A S with S = [[ch, sh], [sh, ch]]
/// in the (p, q) plane.
fn apply_shear(m: &mut Matrix, p: usize, q: usize, y: f64) {
    let (ch, sh) = (y.cosh(), y.sinh());
    let k = m.nrows();
    for j in 0..k {
        let rp = m[[p, j]];
        let rq = m[[q, j]];
        m[[p, j]] = ch * rp - sh * rq;
        m[[q, j]] = -sh * rp + ch * rq;
    }
    for i in 0..k {
        let cp = m[[i, p]];
        let cq = m[[i, q]];
        m[[i, p]] = ch * cp + sh * cq;
        m[[i, q]] = sh * cp + ch * cq;
    }
}

/// Applies the plane rotation A <- U' A U with U_pp = c, U_pq = s,
/// U_qp = -s, U_qq = c.
fn apply_rotation(m: &mut Matrix, p: usize, q: usize, theta: f64) {
    let (c, s) = (theta.cos(), theta.sin());
    let k = m.nrows();
    for j in 0..k {
        let rp = m[[p, j]];
        let rq = m[[q, j]];
        m[[p, j]] = c * rp - s * rq;
        m[[q, j]] = s * rp + c * rq;
    }
    for i in 0..k {
        let cp = m[[i, p]];
        let cq = m[[i, q]];
        m[[i, p]] = c * cp - s * cq;
        m[[i, q]] = s * cp + c * cq;
    }
}

/// Accumulates Q <- Q * S for the plane shear.
fn accumulate_shear(qm: &mut Matrix, p: usize, q: usize, y: f64) {
    let (ch, sh) = (y.cosh(), y.sinh());
    let k = qm.nrows();
    for i in 0..k {
        let cp = qm[[i, p]];
        let cq = qm[[i, q]];
        qm[[i, p]] = ch * cp + sh * cq;
        qm[[i, q]] = sh * cp + ch * cq;
    }
}

/// Accumulates Q <- Q * U for the plane rotation.
fn accumulate_rotation(qm: &mut Matrix, p: usize, q: usize, theta: f64) {
    let (c, s) = (theta.cos(), theta.sin());
    let k = qm.nrows();
    for i in 0..k {
        let cp = qm[[i, p]];
        let cq = qm[[i, q]];
        qm[[i, p]] = c * cp - s * cq;
        qm[[i, q]] = s * cp + c * cq;
    }
}

/// Joint diagonalization by alternating shear and rotation updates over
/// lexicographic pivot pairs. Stops when the relative off-measure decrease
/// over a sweep falls below `tol` or `max_sweeps` is reached; in the
/// latter case the best Q seen is returned with `stalled` set.
pub fn nojd_jdtm(s: &TargetSet, max_sweeps: usize, tol: f64) -> Result<Diagonalizer> {
    let k = s.size();
    let mut work = s.clone();
    let mut q = Matrix::eye(k);
    let mut trace = Vec::new();
    let mut off_prev = off_measure(&work);
    let mut best_off = off_prev;
    let mut best_q = q.clone();
    let mut sweeps_used = 0;
    let mut converged = k < 2 || off_prev == 0.0;
    let norm_scale = normality_measure(&work).max(1e-300);

    while !converged && sweeps_used < max_sweeps {
        for p in 0..(k - 1) {
            for qq in (p + 1)..k {
                let y = optimal_shear(&work, p, qq, 0.5);
                if y != 0.0 {
                    for m in &mut work.matrices {
                        apply_shear(m, p, qq, y);
                    }
                    accumulate_shear(&mut q, p, qq, y);
                }
                let theta = optimal_givens_angle(&work, p, qq);
                if theta != 0.0 {
                    for m in &mut work.matrices {
                        apply_rotation(m, p, qq, theta);
                    }
                    accumulate_rotation(&mut q, p, qq, theta);
                }
            }
        }
        sweeps_used += 1;
        let off = off_measure(&work);
        trace.push((off, normality_measure(&work)));
        let cond = cond_2(&q);
        if cond > 1e8 {
            return Err(Error::IllConditioned(cond));
        }
        if off < best_off {
            best_off = off;
            best_q = q.clone();
        }
        let rel_decrease = (off_prev - off) / off_prev.max(1e-300);
        if off <= norm_scale * 1e-28 || rel_decrease.abs() < tol {
            converged = true;
        }
        off_prev = off;
    }

    Ok(Diagonalizer {
        q: best_q,
        sweeps_used,
        final_off: best_off,
        trace,
        stalled: !converged,
    })
}

/// Diagonalizer from the eigenvectors of a single target matrix. Real
/// eigenvectors may be complex; the inverse is taken in complex
/// arithmetic and only the real parts of Q and Q^{-T} are kept, since
/// those are all that loading recovery consumes. For real eigenvalues
/// this reduces to the exact eigenvector matrix.
#[derive(Debug, Clone)]
pub struct SpectralFactors {
    /// Re(Q), Q the complex eigenvector matrix.
    pub q_re: Matrix,
    /// Re(Q^{-T}), from the complex inverse.
    pub qinvt_re: Matrix,
    /// Off-diagonal mass of Re(Q^{-1} B Q).
    pub final_off: f64,
    /// Ratio of imaginary to real eigenvector mass; nonzero signals
    /// unresolved component pairs with complex eigenvalues.
    pub imag_ratio: f64,
    /// Condition number of the complex eigenvector matrix.
    pub cond: f64,
}

/// Diagonalizer from the eigenvectors of a single target matrix.
pub fn spectral_diagonalizer(b: &Matrix) -> Result<SpectralFactors> {
    let (_, vectors) = eig_nonsymmetric(b)?;
    let k = b.nrows();
    let mut q_re = Matrix::zeros((k, k));
    let mut q_im = Matrix::zeros((k, k));
    let mut real_mass = 0.0;
    let mut imag_mass = 0.0;
    for j in 0..k {
        for i in 0..k {
            let c = vectors[[i, j]];
            q_re[[i, j]] = c.re;
            q_im[[i, j]] = c.im;
            real_mass += c.re * c.re;
            imag_mass += c.im * c.im;
        }
    }
    let imag_ratio = if real_mass > 0.0 {
        (imag_mass / real_mass).sqrt()
    } else {
        f64::INFINITY
    };
    // Complex inversion through the real 2K x 2K embedding
    // [[Re, -Im], [Im, Re]], whose condition number equals that of the
    // complex matrix.
    let mut embed = Matrix::zeros((2 * k, 2 * k));
    embed.slice_mut(ndarray::s![..k, ..k]).assign(&q_re);
    embed.slice_mut(ndarray::s![..k, k..]).assign(&(-&q_im));
    embed.slice_mut(ndarray::s![k.., ..k]).assign(&q_im);
    embed.slice_mut(ndarray::s![k.., k..]).assign(&q_re);
    let cond = cond_2(&embed);
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::Singular("spectral diagonalizer".into()));
    }
    let embed_inv = crate::linalg::invert(&embed)
        .map_err(|_| Error::Singular("spectral diagonalizer".into()))?;
    let qinv_re = embed_inv.slice(ndarray::s![..k, ..k]).to_owned();
    let qinv_im = embed_inv.slice(ndarray::s![k.., ..k]).to_owned();
    // Re(Q^{-1} B Q) for B real.
    let transformed = qinv_re.dot(b).dot(&q_re) - qinv_im.dot(b).dot(&q_im);
    let set = TargetSet::new(vec![transformed], vec!["spectral".into()])?;
    Ok(SpectralFactors {
        q_re,
        qinvt_re: qinv_re.t().to_owned(),
        final_off: off_measure(&set),
        imag_ratio,
        cond,
    })
}
