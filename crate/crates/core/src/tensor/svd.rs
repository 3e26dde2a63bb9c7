//! Truncated SVD, thin QR and Hermitian eigensolves on faer matrices.

use faer::{Mat, MatRef, Side};

use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Bookkeeping for one truncation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationReport {
    pub kept: usize,
    /// Σ discarded s² / Σ s², in [0, 1].
    pub discarded_weight: f64,
    /// True when `chi_max` bound the rank before the cutoff did.
    pub chi_cap_hit: bool,
}

/// `m ≈ u · diag(s) · vh` with `s` nonincreasing.
#[derive(Clone, Debug)]
pub struct TruncatedSvd<T> {
    pub u: Mat<T>,
    pub s: Vec<f64>,
    pub vh: Mat<T>,
    pub report: TruncationReport,
}

/// Number of singular values to keep.
///
/// The smallest `k ≥ 1` whose discarded relative weight is at most `cutoff`,
/// capped at `chi_max`. Returns `(kept, discarded_weight, chi_cap_hit)`.
pub fn truncation_rank(s: &[f64], chi_max: usize, cutoff: f64) -> (usize, f64, bool) {
    let total: f64 = s.iter().map(|x| x * x).sum();
    if total == 0.0 || s.is_empty() {
        return (1, 0.0, false);
    }
    // tail[k] = Σ_{i≥k} s_i², accumulated from the small end for accuracy.
    let mut tail = vec![0.0; s.len() + 1];
    for i in (0..s.len()).rev() {
        tail[i] = tail[i + 1] + s[i] * s[i];
    }
    let mut k_cut = s.len();
    for k in 1..=s.len() {
        if tail[k] / total <= cutoff {
            k_cut = k;
            break;
        }
    }
    let kept = k_cut.min(chi_max);
    let w = (tail[kept] / total).clamp(0.0, 1.0);
    (kept, w, chi_max < k_cut)
}

/// Truncated SVD with a reproducible phase convention.
///
/// Each kept left singular vector is rotated so that its largest-magnitude
/// entry (first one on ties) is real and positive; the matching row of
/// `vh` takes the inverse phase.
pub fn svd_truncate<T: Scalar>(
    m: MatRef<'_, T>,
    chi_max: usize,
    cutoff: f64,
) -> Result<TruncatedSvd<T>> {
    if chi_max == 0 {
        return Err(Error::InvalidInput("chi_max must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&cutoff) {
        return Err(Error::InvalidInput(format!("cutoff {cutoff} outside [0, 1)")));
    }
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite entry at ({i}, {j})"
                )));
            }
        }
    }
    let svd = m.thin_svd().map_err(|e| Error::NumericalFailure {
        detail: format!(
            "SVD of {}x{} matrix did not converge within the solver's sweep limit ({e:?})",
            m.nrows(),
            m.ncols()
        ),
    })?;
    let sv = svd.S().column_vector();
    let s_all: Vec<f64> = (0..sv.nrows()).map(|i| sv[i].re()).collect();
    let (kept, discarded_weight, chi_cap_hit) = truncation_rank(&s_all, chi_max, cutoff);

    let uf = svd.U();
    let vf = svd.V();
    let mut u = Mat::<T>::zeros(m.nrows(), kept);
    let mut vh = Mat::<T>::zeros(kept, m.ncols());
    for c in 0..kept {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..m.nrows() {
            let a = uf[(i, c)].abs2();
            if a > best_abs * (1.0 + 1e-12) {
                best = i;
                best_abs = a;
            }
        }
        let p = uf[(best, c)];
        let pa = p.abs();
        let ph = if pa > 0.0 { p.scale(1.0 / pa) } else { T::one() };
        let phc = ph.conj();
        for i in 0..m.nrows() {
            u[(i, c)] = uf[(i, c)] * phc;
        }
        for j in 0..m.ncols() {
            vh[(c, j)] = ph * vf[(j, c)].conj();
        }
    }
    Ok(TruncatedSvd {
        u,
        s: s_all[..kept].to_vec(),
        vh,
        report: TruncationReport {
            kept,
            discarded_weight,
            chi_cap_hit,
        },
    })
}

/// Thin QR, `m = q · r`, with `r` having a real nonnegative diagonal.
pub fn qr_thin<T: Scalar>(m: MatRef<'_, T>) -> (Mat<T>, Mat<T>) {
    let qr = m.qr();
    let mut q = qr.compute_thin_Q();
    let mut r = qr.thin_R().to_owned();
    for k in 0..r.nrows().min(r.ncols()) {
        let d = r[(k, k)];
        let a = d.abs();
        if a > 0.0 {
            let ph = d.scale(1.0 / a);
            for j in 0..r.ncols() {
                r[(k, j)] = ph.conj() * r[(k, j)];
            }
            for i in 0..q.nrows() {
                q[(i, k)] = q[(i, k)] * ph;
            }
        }
    }
    (q, r)
}

/// Thin LQ, `m = l · q` with `q` having orthonormal rows.
pub fn lq_thin<T: Scalar>(m: MatRef<'_, T>) -> (Mat<T>, Mat<T>) {
    let mh = adjoint(m);
    let (q, r) = qr_thin(mh.as_ref());
    (adjoint(r.as_ref()), adjoint(q.as_ref()))
}

pub fn adjoint<T: Scalar>(m: MatRef<'_, T>) -> Mat<T> {
    Mat::from_fn(m.ncols(), m.nrows(), |i, j| m[(j, i)].conj())
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn eigh<T: Scalar>(m: MatRef<'_, T>) -> Result<(Vec<f64>, Mat<T>)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NumericalFailure {
            detail: format!("Hermitian eigensolve of order {} failed ({e:?})", m.nrows()),
        })?;
    let s = evd.S().column_vector();
    let vals = (0..s.nrows()).map(|i| s[i].re()).collect();
    Ok((vals, evd.U().to_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::C64;

    fn frob<T: Scalar>(m: MatRef<'_, T>) -> f64 {
        let mut s = 0.0;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                s += m[(i, j)].abs2();
            }
        }
        s.sqrt()
    }

    #[test]
    fn identity_keeps_everything() {
        let m = Mat::<f64>::identity(4, 4);
        let t = svd_truncate(m.as_ref(), 4, 0.0).unwrap();
        assert_eq!(t.s, vec![1.0; 4]);
        assert_eq!(t.report.discarded_weight, 0.0);
        assert!(!t.report.chi_cap_hit);
    }

    #[test]
    fn rank_one() {
        let u = [0.6, 0.0, 0.8];
        let v = [0.0, 1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
        let m = Mat::<f64>::from_fn(3, 4, |i, j| u[i] * v[j]);
        let t = svd_truncate(m.as_ref(), 8, 1e-12).unwrap();
        assert_eq!(t.report.kept, 1);
        assert!((t.s[0] - 1.0).abs() < 1e-14);
        // Largest-magnitude entry of u is 0.8 and must come out positive.
        assert!((t.u[(2, 0)] - 0.8).abs() < 1e-14);
    }

    #[test]
    fn phase_convention_complex() {
        let m = Mat::<C64>::from_fn(5, 3, |i, j| {
            C64::new((i as f64 * 0.7 + j as f64).sin(), (i as f64 - j as f64 * 1.3).cos())
        });
        let t = svd_truncate(m.as_ref(), 3, 0.0).unwrap();
        for c in 0..3 {
            let col: Vec<C64> = (0..5).map(|i| t.u[(i, c)]).collect();
            let big = col.iter().fold(col[0], |a, &b| if b.norm() > a.norm() { b } else { a });
            assert!(big.im.abs() < 1e-12 && big.re > 0.0);
        }
        let rec = &t.u * Mat::from_fn(3, 3, |i, j| if i == j { C64::new(t.s[i], 0.0) } else { C64::new(0.0, 0.0) }) * &t.vh;
        assert!(frob((&rec - &m).as_ref()) < 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = Mat::<f64>::identity(2, 2);
        m[(1, 0)] = f64::NAN;
        assert!(matches!(svd_truncate(m.as_ref(), 2, 0.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn qr_and_lq_reconstruct() {
        let m = Mat::<C64>::from_fn(6, 4, |i, j| C64::new((i * j) as f64 * 0.3 - 1.0, i as f64 - j as f64));
        let (q, r) = qr_thin(m.as_ref());
        assert!(frob((&q * &r - &m).as_ref()) < 1e-12);
        let (l, q2) = lq_thin(m.as_ref());
        assert!(frob((&l * &q2 - &m).as_ref()) < 1e-12);
        let qq = &q2 * adjoint(q2.as_ref());
        assert!(frob((&qq - Mat::<C64>::identity(qq.nrows(), qq.ncols())).as_ref()) < 1e-12);
    }
}
