//! Eigendecomposition of a real non-symmetric matrix: Householder
//! reduction to Hessenberg form followed by the shifted QR iteration with
//! eigenvector back-substitution (the classic EISPACK orthes/hqr2 pair).

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use ndarray::Array2;
use num_complex::Complex64;

/// Eigenvalues and right eigenvectors of a general square matrix.
/// Eigenvectors are unit-norm columns; complex pairs are conjugate.
/// Fails with `NonConvergence` if the QR iteration exceeds 100 steps per
/// eigenvalue.
pub fn eig_nonsymmetric(a: &Matrix) -> Result<(Vec<Complex64>, Array2<Complex64>)> {
    let n = a.nrows();
    if n == 0 || n != a.ncols() {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a nonempty square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let mut h = a.clone();
    let mut v = Matrix::eye(n);
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    orthes(&mut h, &mut v);
    hqr2(&mut h, &mut v, &mut d, &mut e)?;

    let mut values = Vec::with_capacity(n);
    let mut vectors = Array2::from_elem((n, n), Complex64::new(0.0, 0.0));
    let mut j = 0;
    while j < n {
        if e[j] == 0.0 {
            values.push(Complex64::new(d[j], 0.0));
            for i in 0..n {
                vectors[[i, j]] = Complex64::new(v[[i, j]], 0.0);
            }
            j += 1;
        } else {
            // Conjugate pair packed as (real part, imaginary part) columns.
            values.push(Complex64::new(d[j], e[j]));
            values.push(Complex64::new(d[j + 1], e[j + 1]));
            for i in 0..n {
                let re = v[[i, j]];
                let im = v[[i, j + 1]];
                vectors[[i, j]] = Complex64::new(re, im);
                vectors[[i, j + 1]] = Complex64::new(re, -im);
            }
            j += 2;
        }
    }
    for j in 0..n {
        let norm = vectors
            .column(j)
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt();
        if norm > 0.0 {
            for i in 0..n {
                vectors[[i, j]] /= norm;
            }
        }
    }
    Ok((values, vectors))
}

/// Householder reduction to upper Hessenberg form, accumulating the
/// orthogonal transformation in `v`.
fn orthes(h: &mut Matrix, v: &mut Matrix) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    let low = 0;
    let high = n - 1;
    let mut ort = vec![0.0; n];

    for m in (low + 1)..high {
        let mut scale = 0.0;
        for i in m..=high {
            scale += h[[i, m - 1]].abs();
        }
        if scale != 0.0 {
            let mut hh = 0.0;
            for i in (m..=high).rev() {
                ort[i] = h[[i, m - 1]] / scale;
                hh += ort[i] * ort[i];
            }
            let mut g = hh.sqrt();
            if ort[m] > 0.0 {
                g = -g;
            }
            hh -= ort[m] * g;
            ort[m] -= g;

            for j in m..n {
                let mut f = 0.0;
                for i in (m..=high).rev() {
                    f += ort[i] * h[[i, j]];
                }
                f /= hh;
                for i in m..=high {
                    h[[i, j]] -= f * ort[i];
                }
            }
            for i in 0..=high {
                let mut f = 0.0;
                for j in (m..=high).rev() {
                    f += ort[j] * h[[i, j]];
                }
                f /= hh;
                for j in m..=high {
                    h[[i, j]] -= f * ort[j];
                }
            }
            ort[m] *= scale;
            h[[m, m - 1]] = scale * g;
        }
    }

    for m in ((low + 1)..high).rev() {
        if h[[m, m - 1]] != 0.0 {
            for i in (m + 1)..=high {
                ort[i] = h[[i, m - 1]];
            }
            for j in m..=high {
                let mut g = 0.0;
                for i in m..=high {
                    g += ort[i] * v[[i, j]];
                }
                // Double division avoids possible underflow.
                g = (g / ort[m]) / h[[m, m - 1]];
                for i in m..=high {
                    v[[i, j]] += g * ort[i];
                }
            }
        }
    }
}

fn cdiv(xr: f64, xi: f64, yr: f64, yi: f64) -> (f64, f64) {
    if yr.abs() > yi.abs() {
        let r = yi / yr;
        let d = yr + r * yi;
        ((xr + r * xi) / d, (xi - r * xr) / d)
    } else {
        let r = yr / yi;
        let d = yi + r * yr;
        ((r * xr + xi) / d, (r * xi - xr) / d)
    }
}

/// Hessenberg to real Schur form by the implicit double-shift QR
/// iteration, followed by eigenvector back-substitution. Real eigenvalues
/// land in `d`; conjugate pairs in `(d, e)` with packed vector columns.
fn hqr2(h: &mut Matrix, v: &mut Matrix, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let nn = h.nrows();
    let low: i64 = 0;
    let eps = 2.0_f64.powi(-52);
    let max_iters = 100 * nn;
    let mut total_iters = 0usize;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r, mut s, mut z) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut t, mut w, mut x, mut y): (f64, f64, f64, f64);

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[[i, j]].abs();
        }
    }
    if norm == 0.0 {
        for i in 0..nn {
            d[i] = 0.0;
            e[i] = 0.0;
        }
        return Ok(());
    }

    let mut n: i64 = nn as i64 - 1;
    let mut iter = 0;
    while n >= low {
        let nu = n as usize;
        let mut l = n;
        while l > low {
            let lu = l as usize;
            s = h[[lu - 1, lu - 1]].abs() + h[[lu, lu]].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[[lu, lu - 1]].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One root found.
            h[[nu, nu]] += exshift;
            d[nu] = h[[nu, nu]];
            e[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // Two roots found.
            w = h[[nu, nu - 1]] * h[[nu - 1, nu]];
            p = (h[[nu - 1, nu - 1]] - h[[nu, nu]]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[[nu, nu]] += exshift;
            h[[nu - 1, nu - 1]] += exshift;
            x = h[[nu, nu]];

            if q >= 0.0 {
                // Real pair.
                z = if p >= 0.0 { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = d[nu - 1];
                if z != 0.0 {
                    d[nu] = x - w / z;
                }
                e[nu - 1] = 0.0;
                e[nu] = 0.0;
                x = h[[nu, nu - 1]];
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p /= r;
                q /= r;
                for j in (nu - 1)..nn {
                    z = h[[nu - 1, j]];
                    h[[nu - 1, j]] = q * z + p * h[[nu, j]];
                    h[[nu, j]] = q * h[[nu, j]] - p * z;
                }
                for i in 0..=nu {
                    z = h[[i, nu - 1]];
                    h[[i, nu - 1]] = q * z + p * h[[i, nu]];
                    h[[i, nu]] = q * h[[i, nu]] - p * z;
                }
                for i in 0..nn {
                    z = v[[i, nu - 1]];
                    v[[i, nu - 1]] = q * z + p * v[[i, nu]];
                    v[[i, nu]] = q * v[[i, nu]] - p * z;
                }
            } else {
                // Complex pair.
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            // No convergence yet; form a shift.
            x = h[[nu, nu]];
            y = 0.0;
            w = 0.0;
            if l < n {
                y = h[[nu - 1, nu - 1]];
                w = h[[nu, nu - 1]] * h[[nu - 1, nu]];
            }

            if iter == 10 {
                exshift += x;
                for i in (low as usize)..=nu {
                    h[[i, i]] -= x;
                }
                s = h[[nu, nu - 1]].abs() + h[[nu - 1, nu - 2]].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in (low as usize)..=nu {
                        h[[i, i]] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total_iters += 1;
            if total_iters > max_iters {
                return Err(Error::NonConvergence(total_iters));
            }

            let mut m = n - 2;
            while m >= l {
                let mu = m as usize;
                z = h[[mu, mu]];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[[mu + 1, mu]] + h[[mu, mu + 1]];
                q = h[[mu + 1, mu + 1]] - z - r - s;
                r = h[[mu + 2, mu + 1]];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[[mu, mu - 1]].abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs()
                            * (h[[mu - 1, mu - 1]].abs() + z.abs() + h[[mu + 1, mu + 1]].abs()))
                {
                    break;
                }
                m -= 1;
            }

            let mu = m as usize;
            for i in (mu + 2)..=nu {
                h[[i, i - 2]] = 0.0;
                if i > mu + 2 {
                    h[[i, i - 3]] = 0.0;
                }
            }

            // Double QR step on rows l..n, columns m..n.
            for k in mu..nu {
                let notlast = k != nu - 1;
                if k != mu {
                    p = h[[k, k - 1]];
                    q = h[[k + 1, k - 1]];
                    r = if notlast { h[[k + 2, k - 1]] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != mu {
                        h[[k, k - 1]] = -s * x;
                    } else if l != m {
                        h[[k, k - 1]] = -h[[k, k - 1]];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..nn {
                        p = h[[k, j]] + q * h[[k + 1, j]];
                        if notlast {
                            p += r * h[[k + 2, j]];
                            h[[k + 2, j]] -= p * z;
                        }
                        h[[k, j]] -= p * x;
                        h[[k + 1, j]] -= p * y;
                    }
                    for i in 0..=nu.min(k + 3) {
                        p = x * h[[i, k]] + y * h[[i, k + 1]];
                        if notlast {
                            p += z * h[[i, k + 2]];
                            h[[i, k + 2]] -= p * r;
                        }
                        h[[i, k]] -= p;
                        h[[i, k + 1]] -= p * q;
                    }
                    for i in 0..nn {
                        p = x * v[[i, k]] + y * v[[i, k + 1]];
                        if notlast {
                            p += z * v[[i, k + 2]];
                            v[[i, k + 2]] -= p * r;
                        }
                        v[[i, k]] -= p;
                        v[[i, k + 1]] -= p * q;
                    }
                }
            }
        }
    }

    // Back-substitution for the vectors of the upper quasi-triangular form.
    for n in (0..nn).rev() {
        p = d[n];
        q = e[n];

        if q == 0.0 {
            // Real vector.
            let mut l = n;
            h[[n, n]] = 1.0;
            for i in (0..n).rev() {
                w = h[[i, i]] - p;
                r = 0.0;
                for j in l..=n {
                    r += h[[i, j]] * h[[j, n]];
                }
                if e[i] < 0.0 {
                    z = w;
                    s = r;
                } else {
                    l = i;
                    if e[i] == 0.0 {
                        if w != 0.0 {
                            h[[i, n]] = -r / w;
                        } else {
                            h[[i, n]] = -r / (eps * norm);
                        }
                    } else {
                        x = h[[i, i + 1]];
                        y = h[[i + 1, i]];
                        q = (d[i] - p) * (d[i] - p) + e[i] * e[i];
                        t = (x * s - z * r) / q;
                        h[[i, n]] = t;
                        if x.abs() > z.abs() {
                            h[[i + 1, n]] = (-r - w * t) / x;
                        } else {
                            h[[i + 1, n]] = (-s - y * t) / z;
                        }
                    }
                    // Overflow control.
                    t = h[[i, n]].abs();
                    if (eps * t) * t > 1.0 {
                        for j in i..=n {
                            h[[j, n]] /= t;
                        }
                    }
                }
            }
        } else if q < 0.0 {
            // Complex vector; the pair occupies columns n-1 and n.
            let mut l = n - 1;
            if h[[n, n - 1]].abs() > h[[n - 1, n]].abs() {
                h[[n - 1, n - 1]] = q / h[[n, n - 1]];
                h[[n - 1, n]] = -(h[[n, n]] - p) / h[[n, n - 1]];
            } else {
                let (re, im) = cdiv(0.0, -h[[n - 1, n]], h[[n - 1, n - 1]] - p, q);
                h[[n - 1, n - 1]] = re;
                h[[n - 1, n]] = im;
            }
            h[[n, n - 1]] = 0.0;
            h[[n, n]] = 1.0;
            for i in (0..n.saturating_sub(1)).rev() {
                let mut ra = 0.0;
                let mut sa = 0.0;
                for j in l..=n {
                    ra += h[[i, j]] * h[[j, n - 1]];
                    sa += h[[i, j]] * h[[j, n]];
                }
                w = h[[i, i]] - p;

                if e[i] < 0.0 {
                    z = w;
                    r = ra;
                    s = sa;
                } else {
                    l = i;
                    if e[i] == 0.0 {
                        let (re, im) = cdiv(-ra, -sa, w, q);
                        h[[i, n - 1]] = re;
                        h[[i, n]] = im;
                    } else {
                        x = h[[i, i + 1]];
                        y = h[[i + 1, i]];
                        let mut vr = (d[i] - p) * (d[i] - p) + e[i] * e[i] - q * q;
                        let vi = (d[i] - p) * 2.0 * q;
                        if vr == 0.0 && vi == 0.0 {
                            vr = eps * norm * (w.abs() + q.abs() + x.abs() + y.abs() + z.abs());
                        }
                        let (re, im) =
                            cdiv(x * r - z * ra + q * sa, x * s - z * sa - q * ra, vr, vi);
                        h[[i, n - 1]] = re;
                        h[[i, n]] = im;
                        if x.abs() > z.abs() + q.abs() {
                            h[[i + 1, n - 1]] = (-ra - w * h[[i, n - 1]] + q * h[[i, n]]) / x;
                            h[[i + 1, n]] = (-sa - w * h[[i, n]] - q * h[[i, n - 1]]) / x;
                        } else {
                            let (re, im) =
                                cdiv(-r - y * h[[i, n - 1]], -s - y * h[[i, n]], z, q);
                            h[[i + 1, n - 1]] = re;
                            h[[i + 1, n]] = im;
                        }
                    }
                    // Overflow control.
                    t = h[[i, n - 1]].abs().max(h[[i, n]].abs());
                    if (eps * t) * t > 1.0 {
                        for j in i..=n {
                            h[[j, n - 1]] /= t;
                            h[[j, n]] /= t;
                        }
                    }
                }
            }
        }
    }

    // Back-transform to eigenvectors of the original matrix.
    for j in (0..nn).rev() {
        for i in 0..nn {
            z = 0.0;
            for k in 0..=j {
                z += v[[i, k]] * h[[k, j]];
            }
            v[[i, j]] = z;
        }
    }
    Ok(())
}
