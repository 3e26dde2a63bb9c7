//! Restarted Lanczos for the lowest eigenpair of a Hermitian operator.
//!
//! The operator is only seen through `apply(x, y)`, which must write `H·x`
//! into `y`. Every new Krylov vector is orthogonalized twice against the
//! full basis (and against any deflation vectors), so the tridiagonal
//! projection stays accurate even for long runs.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scalar::{axpy, inner, norm, Scalar};
use super::svd::eigh;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct LanczosOptions<T> {
    /// Residual target, relative to `max(1, |e0|)`.
    pub tol: f64,
    /// Budget of operator applications.
    pub max_iter: usize,
    /// Krylov basis size before an explicit restart.
    pub krylov_dim: usize,
    pub start: Option<Vec<T>>,
    /// Orthonormal vectors projected out of the search space.
    pub deflate: Vec<Vec<T>>,
    /// Seed for random start and restart vectors.
    pub seed: u64,
    /// Return the best Ritz pair instead of an error when the budget runs
    /// out; the caller inspects `residual`.
    pub accept_unconverged: bool,
}

impl<T> Default for LanczosOptions<T> {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 5000,
            krylov_dim: 40,
            start: None,
            deflate: Vec::new(),
            seed: 0x5eed,
            accept_unconverged: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LanczosResult<T> {
    pub e0: f64,
    pub v0: Vec<T>,
    /// ‖H·v0 − e0·v0‖, evaluated with one extra application.
    pub residual: f64,
    pub matvecs: usize,
    pub breakdown_restarts: usize,
}

/// Lowest eigenpair with default options apart from `tol` and `max_iter`.
pub fn lanczos_lowest<T: Scalar>(
    apply: impl FnMut(&[T], &mut [T]),
    dim: usize,
    tol: f64,
    max_iter: usize,
) -> Result<LanczosResult<T>> {
    let opts = LanczosOptions {
        tol,
        max_iter,
        ..Default::default()
    };
    lanczos_lowest_with(apply, dim, &opts)
}

fn random_vector<T: Scalar>(rng: &mut ChaCha8Rng, dim: usize) -> Vec<T> {
    (0..dim).map(|_| T::from_real(rng.gen::<f64>() * 2.0 - 1.0)).collect()
}

fn project_out<T: Scalar>(basis: &[Vec<T>], w: &mut [T]) {
    for q in basis {
        let c = inner(q, w);
        axpy(-c, q, w);
    }
}

pub fn lanczos_lowest_with<T: Scalar>(
    mut apply: impl FnMut(&[T], &mut [T]),
    dim: usize,
    opts: &LanczosOptions<T>,
) -> Result<LanczosResult<T>> {
    if dim == 0 {
        return Err(Error::InvalidInput("Lanczos dimension must be positive".into()));
    }
    let free_dim = dim.saturating_sub(opts.deflate.len()).max(1);
    let m_max = opts.krylov_dim.max(2).min(free_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<T> = match &opts.start {
        Some(s) if s.len() == dim => s.clone(),
        Some(s) => {
            return Err(Error::Shape(format!(
                "start vector has length {}, operator dimension is {dim}",
                s.len()
            )))
        }
        None => random_vector(&mut rng, dim),
    };
    let mut matvecs = 0;
    let mut breakdowns = 0;
    let mut best_residual = f64::INFINITY;
    let mut w = vec![T::zero(); dim];

    loop {
        project_out(&opts.deflate, &mut x);
        project_out(&opts.deflate, &mut x);
        let nx = norm(&x);
        if !(nx > 1e-300) || !nx.is_finite() {
            breakdowns += 1;
            if breakdowns > 3 {
                return Err(Error::Breakdown { restarts: 3 });
            }
            x = random_vector(&mut rng, dim);
            continue;
        }
        x.iter_mut().for_each(|v| *v = v.scale(1.0 / nx));

        let mut basis: Vec<Vec<T>> = vec![std::mem::take(&mut x)];
        let mut alphas: Vec<f64> = Vec::with_capacity(m_max);
        let mut betas: Vec<f64> = Vec::with_capacity(m_max);

        loop {
            let j = basis.len() - 1;
            apply(&basis[j], &mut w);
            matvecs += 1;
            let alpha = inner(&basis[j], &w).re();
            for _ in 0..2 {
                project_out(&opts.deflate, &mut w);
                project_out(&basis, &mut w);
            }
            let beta = norm(&w);
            alphas.push(alpha);

            let (theta, s) = tridiag_lowest(&alphas, &betas)?;
            let scale = theta.abs().max(1.0);
            let estimate = beta * s[j].abs();
            best_residual = best_residual.min(estimate);
            let invariant = beta <= 1e-12 * scale || basis.len() == free_dim;
            let converged = estimate <= 0.1 * opts.tol * scale;

            if converged || invariant || basis.len() == m_max || matvecs >= opts.max_iter {
                let mut y = vec![T::zero(); dim];
                for (q, &c) in basis.iter().zip(&s) {
                    axpy(T::from_real(c), q, &mut y);
                }
                let ny = norm(&y);
                y.iter_mut().for_each(|v| *v = v.scale(1.0 / ny));
                apply(&y, &mut w);
                matvecs += 1;
                let e = inner(&y, &w).re();
                axpy(T::from_real(-e), &y, &mut w);
                let r = norm(&w);
                best_residual = best_residual.min(r);
                if r <= opts.tol * e.abs().max(1.0)
                    || (opts.accept_unconverged && matvecs >= opts.max_iter)
                {
                    return Ok(LanczosResult {
                        e0: e,
                        v0: y,
                        residual: r,
                        matvecs,
                        breakdown_restarts: breakdowns,
                    });
                }
                if matvecs >= opts.max_iter {
                    return Err(Error::NonConvergence {
                        iterations: matvecs,
                        best_residual,
                    });
                }
                if invariant && !converged && basis.len() < free_dim {
                    breakdowns += 1;
                    if breakdowns > 3 {
                        return Err(Error::Breakdown { restarts: 3 });
                    }
                    // Keep the Ritz direction, add fresh noise to leave the
                    // invariant subspace.
                    let noise: Vec<T> = random_vector(&mut rng, dim);
                    x = y;
                    axpy(T::from_real(0.1), &noise, &mut x);
                } else {
                    x = y;
                }
                break;
            }
            let next: Vec<T> = w.iter().map(|v| v.scale(1.0 / beta)).collect();
            betas.push(beta);
            basis.push(next);
        }
    }
}

/// Lowest eigenpair of the symmetric tridiagonal matrix (alphas, betas).
fn tridiag_lowest(alphas: &[f64], betas: &[f64]) -> Result<(f64, Vec<f64>)> {
    let m = alphas.len();
    if m == 1 {
        return Ok((alphas[0], vec![1.0]));
    }
    let t = tridiag(alphas, betas);
    let (vals, vecs) = eigh(t.as_ref())?;
    Ok((vals[0], (0..m).map(|i| vecs[(i, 0)]).collect()))
}

pub(crate) fn tridiag(alphas: &[f64], betas: &[f64]) -> Mat<f64> {
    let m = alphas.len();
    Mat::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::C64;

    fn dense_apply<T: Scalar>(m: &Mat<T>) -> impl FnMut(&[T], &mut [T]) + '_ {
        move |x, y| {
            for i in 0..m.nrows() {
                y[i] = (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum();
            }
        }
    }

    #[test]
    fn diagonal_operator() {
        let d = [-2.0, 0.0, 3.0];
        let r = lanczos_lowest::<f64>(
            |x, y| {
                for i in 0..3 {
                    y[i] = d[i] * x[i];
                }
            },
            3,
            1e-12,
            100,
        )
        .unwrap();
        assert!((r.e0 + 2.0).abs() < 1e-12);
        assert!((r.v0[0].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pauli_x() {
        let m = Mat::<C64>::from_fn(2, 2, |i, j| {
            if i != j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        });
        let r = lanczos_lowest(dense_apply(&m), 2, 1e-12, 50).unwrap();
        assert!((r.e0 + 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional() {
        let r = lanczos_lowest::<f64>(|x, y| y[0] = 4.0 * x[0], 1, 1e-12, 10).unwrap();
        assert_eq!(r.e0, 4.0);
    }

    #[test]
    fn zero_start_restarts() {
        let opts = LanczosOptions {
            start: Some(vec![0.0; 3]),
            tol: 1e-12,
            ..Default::default()
        };
        let r = lanczos_lowest_with(
            |x: &[f64], y: &mut [f64]| y.copy_from_slice(x),
            3,
            &opts,
        )
        .unwrap();
        assert_eq!(r.breakdown_restarts, 1);
    }

    #[test]
    fn persistent_breakdown_errors() {
        // Everything is deflated away, so every start vector vanishes.
        let opts = LanczosOptions {
            deflate: vec![vec![1.0]],
            ..Default::default()
        };
        let err = lanczos_lowest_with(|x: &[f64], y: &mut [f64]| y.copy_from_slice(x), 1, &opts);
        assert!(matches!(err, Err(Error::Breakdown { restarts: 3 })));
    }

    #[test]
    fn budget_exhaustion_reports_residual() {
        let n = 400;
        let m = Mat::<f64>::from_fn(n, n, |i, j| {
            if i == j {
                (i as f64 / n as f64).powi(2)
            } else if i.abs_diff(j) == 1 {
                0.3
            } else {
                0.0
            }
        });
        let err = lanczos_lowest(dense_apply(&m), n, 1e-14, 5).unwrap_err();
        match err {
            Error::NonConvergence { iterations, best_residual } => {
                assert!(iterations >= 5);
                assert!(best_residual.is_finite());
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn deflation_gives_second_level() {
        let d = [-2.0, 0.5, 3.0, 7.0];
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..4 {
                y[i] = d[i] * x[i];
            }
        };
        let opts = LanczosOptions {
            deflate: vec![vec![1.0, 0.0, 0.0, 0.0]],
            tol: 1e-12,
            ..Default::default()
        };
        let r = lanczos_lowest_with(apply, 4, &opts).unwrap();
        assert!((r.e0 - 0.5).abs() < 1e-12);
    }
}
