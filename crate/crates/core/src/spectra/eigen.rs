//! Eigenvalues of `H = iS` for real skew-symmetric `S`.
//!
//! `S` is reduced to skew-symmetric tridiagonal form `T = Q^T S Q` with
//! Householder reflections. Since `Q` is real orthogonal, `iT` has the same
//! spectrum as `iS`, and a diagonal unitary similarity maps `iT` onto the
//! real symmetric tridiagonal matrix with zero diagonal and off-diagonal
//! `|T_{j,j+1}|`. That matrix is diagonalized with implicit QL.
//!
//! For a reflection `P = I - tau v v^T` and skew `B`, `v^T B v = 0`, so
//! `P B P = B + v w^T - w v^T` with `w = tau B v`. Only the strict upper
//! triangle is touched; each step updates row `i` and accumulates the next
//! step's `B v` from the freshly updated row in the same sweep.

use crate::error::{Error, Result};

/// Off-diagonal of the tridiagonal form of the dense row-major skew matrix
/// `a` (only the strict upper triangle is read). `a` is overwritten.
pub fn skew_tridiagonalize(a: &mut [f64], n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    if n < 2 {
        return Vec::new();
    }
    let mut off = vec![0.0; n - 1];
    let mut v = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut v_next = vec![0.0; n];
    let mut y_next = vec![0.0; n];

    let (mut tau, beta) = householder(&a[1..n], &mut v[1..]);
    off[0] = beta;
    if n == 2 {
        return off;
    }
    for i in 1..n {
        let (row, vi) = (&a[i * n + i + 1..(i + 1) * n], v[i]);
        let (yi, tail) = y[i..].split_first_mut().unwrap();
        *yi += dot(row, &v[i + 1..]);
        axpy(-vi, row, tail);
    }

    for j in 0..n - 2 {
        let lo = j + 1;
        for l in lo..n {
            w[l] = tau * y[l];
        }
        // Row j+1 first so the next reflector can be formed before the sweep.
        {
            let r = lo;
            let (vr, wr) = (v[r], w[r]);
            let row = &mut a[r * n + r + 1..(r + 1) * n];
            rank2(row, vr, &w[r + 1..], wr, &v[r + 1..]);
        }
        v_next[..].fill(0.0);
        y_next[..].fill(0.0);
        let (tau_next, beta_next) = {
            let r = lo;
            let row = &a[r * n + r + 1..(r + 1) * n];
            householder(row, &mut v_next[r + 1..])
        };
        off[lo] = beta_next;

        for i in lo + 1..n {
            let (vi, wi, vni) = (v[i], w[i], v_next[i]);
            let row = &mut a[i * n + i + 1..(i + 1) * n];
            rank2(row, vi, &w[i + 1..], wi, &v[i + 1..]);
            if tau_next != 0.0 {
                let row = &a[i * n + i + 1..(i + 1) * n];
                let (yi, tail) = y_next[i..].split_first_mut().unwrap();
                *yi += dot(row, &v_next[i + 1..]);
                axpy(-vni, row, tail);
            }
        }

        std::mem::swap(&mut v, &mut v_next);
        std::mem::swap(&mut y, &mut y_next);
        tau = tau_next;
    }
    off
}

/// Builds `v` and `tau` with `(I - tau v v^T) x = beta e_1` and returns
/// `(tau, beta)`. `tau = 0` means no reflection is needed.
fn householder(x: &[f64], v: &mut [f64]) -> (f64, f64) {
    debug_assert_eq!(x.len(), v.len());
    let x0 = x[0];
    let tail_sq: f64 = x[1..].iter().map(|t| t * t).sum();
    if tail_sq == 0.0 {
        v.fill(0.0);
        return (0.0, x0);
    }
    let alpha = (x0 * x0 + tail_sq).sqrt();
    let beta = -alpha.copysign(x0);
    v[0] = x0 - beta;
    v[1..].copy_from_slice(&x[1..]);
    let tau = 1.0 / (alpha * (alpha + x0.abs()));
    (tau, beta)
}

/// `row += vr * w - wr * v`
#[inline]
fn rank2(row: &mut [f64], vr: f64, w: &[f64], wr: f64, v: &[f64]) {
    for ((r, &wl), &vl) in row.iter_mut().zip(w).zip(v) {
        *r += vr * wl - wr * vl;
    }
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (`e[i]` couples `i` and `i + 1`), by implicit QL with
/// Wilkinson-style shifts. Unsorted.
pub fn symmetric_tridiagonal_eigenvalues(mut d: Vec<f64>, e_in: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(d);
    }
    assert_eq!(e_in.len() + 1, n);
    let mut e = e_in.to_vec();
    e.push(0.0);
    let norm = d
        .iter()
        .chain(e.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = f64::EPSILON * f64::EPSILON * norm;

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 100 {
                return Err(Error::InvalidInput("tridiagonal QL failed to converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

/// Sorted eigenvalues of `iS` for the dense row-major skew matrix `s`.
pub fn skew_hermitian_spectrum(s: &[f64], n: usize) -> Result<Vec<f64>> {
    if s.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: s.len(),
        });
    }
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let mut work = s.to_vec();
    let off: Vec<f64> = skew_tridiagonalize(&mut work, n)
        .into_iter()
        .map(f64::abs)
        .collect();
    let mut levels = symmetric_tridiagonal_eigenvalues(vec![0.0; n], &off)?;
    levels.sort_by(f64::total_cmp);
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense `Q^T S Q` check: the tridiagonal form must preserve the
    /// Frobenius norm of `S`.
    #[test]
    fn tridiagonal_form_preserves_frobenius_norm() {
        let n = 9;
        let mut s = vec![0.0; n * n];
        let mut x = 0.37f64;
        for i in 0..n {
            for j in i + 1..n {
                x = (x * 3.7 + 0.11).fract() - 0.5;
                s[i * n + j] = x;
                s[j * n + i] = -x;
            }
        }
        let fro: f64 = s.iter().map(|v| v * v).sum();
        let mut work = s.clone();
        let off = skew_tridiagonalize(&mut work, n);
        let tri: f64 = 2.0 * off.iter().map(|v| v * v).sum::<f64>();
        assert!((fro - tri).abs() < 1e-13 * fro, "{fro} vs {tri}");
    }

    #[test]
    fn ql_on_known_tridiagonal() {
        // Free-particle chain: eigenvalues 2 cos(pi m / (n + 1)).
        let n = 12;
        let mut ev = symmetric_tridiagonal_eigenvalues(vec![0.0; n], &vec![1.0; n - 1]).unwrap();
        ev.sort_by(f64::total_cmp);
        let mut expected: Vec<f64> = (1..=n)
            .map(|m| 2.0 * (std::f64::consts::PI * m as f64 / (n as f64 + 1.0)).cos())
            .collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn ql_handles_zero_couplings() {
        let mut ev = symmetric_tridiagonal_eigenvalues(vec![3.0, -1.0, 2.0], &[0.0, 0.0]).unwrap();
        ev.sort_by(f64::total_cmp);
        assert_eq!(ev, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_non_finite() {
        let s = [0.0, f64::NAN, -f64::NAN, 0.0];
        assert!(matches!(skew_hermitian_spectrum(&s, 2), Err(Error::InvalidInput(_))));
        assert!(skew_hermitian_spectrum(&s[..3], 2).is_err());
    }
}
