//! Krylov approximation of `exp(z·H)·v` for Hermitian `H`.

use super::lanczos::tridiag;
use super::scalar::{axpy, inner, norm, Scalar, C64};
use super::svd::eigh;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct ExpmOptions {
    /// Allowed error per unit of |z|, in the 2-norm of the result.
    pub tol: f64,
    pub krylov_dim: usize,
    /// Hard limit on the number of substeps.
    pub max_substeps: usize,
}

impl Default for ExpmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            krylov_dim: 30,
            max_substeps: 100_000,
        }
    }
}

/// Returns `exp(z·H)·v`, splitting `z` into substeps until the standard
/// a-posteriori estimate `‖v‖·β_m·|e_mᵀ exp(τzT) e_1|` meets the tolerance.
pub fn expm_krylov(
    mut apply: impl FnMut(&[C64], &mut [C64]),
    v: &[C64],
    z: C64,
    opts: &ExpmOptions,
) -> Result<Vec<C64>> {
    let dim = v.len();
    let mut cur = v.to_vec();
    let total = z.norm();
    if total == 0.0 || dim == 0 {
        return Ok(cur);
    }
    let mut remaining = 1.0f64;
    let mut frac = 1.0f64;
    let mut w = vec![C64::zero(); dim];
    let mut steps = 0;
    while remaining > 1e-15 {
        steps += 1;
        if steps > opts.max_substeps {
            return Err(Error::NonConvergence {
                iterations: steps,
                best_residual: f64::NAN,
            });
        }
        let nrm = norm(&cur);
        if nrm == 0.0 {
            return Ok(cur);
        }
        let mut basis = vec![cur.iter().map(|x| x.scale(1.0 / nrm)).collect::<Vec<_>>()];
        let mut alphas = Vec::new();
        let mut betas = Vec::new();
        let beta_last;
        let m_max = opts.krylov_dim.min(dim);
        loop {
            let j = basis.len() - 1;
            apply(&basis[j], &mut w);
            alphas.push(inner(&basis[j], &w).re);
            for _ in 0..2 {
                for q in &basis {
                    let c = inner(q, &w);
                    axpy(-c, q, &mut w);
                }
            }
            let beta = norm(&w);
            let happy = beta <= 1e-13 * alphas.iter().fold(1.0f64, |a, b| a.max(b.abs()));
            if happy || basis.len() == m_max {
                beta_last = if happy || basis.len() == dim { 0.0 } else { beta };
                break;
            }
            betas.push(beta);
            basis.push(w.iter().map(|x| x.scale(1.0 / beta)).collect());
        }
        let m = alphas.len();
        let (theta, s) = eigh(tridiag(&alphas, &betas).as_ref())?;

        let mut tau = frac.min(remaining);
        let coeffs = loop {
            let zt = z * tau;
            // y = S · exp(zt Θ) · Sᵀ e_1
            let y: Vec<C64> = (0..m)
                .map(|i| {
                    (0..m)
                        .map(|k| (zt * theta[k]).exp() * (s[(i, k)] * s[(0, k)]))
                        .sum()
                })
                .collect();
            let err = nrm * beta_last * y[m - 1].norm();
            if err <= opts.tol * tau * total.max(1.0) || tau < 1e-12 {
                break y;
            }
            tau *= 0.5;
        };
        let mut next = vec![C64::zero(); dim];
        for (q, &c) in basis.iter().zip(&coeffs) {
            axpy(c.scale(nrm), q, &mut next);
        }
        cur = next;
        remaining -= tau;
        // Let the next substep try a slightly longer stride.
        frac = (tau * 1.5).min(1.0);
    }
    Ok(cur)
}
