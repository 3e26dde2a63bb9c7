//! Finite differences on possibly non-uniform grids.

use crate::error::{Error, Result};

/// Derivative of `values` with respect to `lambdas`.
///
/// Interior points use the three-point central stencil for unequal
/// spacings, the two ends the three-point one-sided stencil; both are exact
/// for quadratics. Order 2 applies the first-derivative operator twice.
pub fn finite_diff(lambdas: &[f64], values: &[f64], order: u32) -> Result<Vec<f64>> {
    if lambdas.len() != values.len() {
        return Err(Error::Validation(format!(
            "{} grid points but {} values",
            lambdas.len(),
            values.len()
        )));
    }
    if lambdas.len() < 3 {
        return Err(Error::Validation(format!(
            "finite differences need at least 3 points, got {}",
            lambdas.len()
        )));
    }
    if let Some(w) = lambdas.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::Validation(format!(
            "grid must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    match order {
        1 => Ok(first(lambdas, values)),
        2 => Ok(first(lambdas, &first(lambdas, values))),
        o => Err(Error::Validation(format!("derivative order must be 1 or 2, got {o}"))),
    }
}

fn first(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = Vec::with_capacity(n);
    // f'(x0) from x0, x1, x2
    let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
    d.push(-(2.0 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] - h1 / (h2 * (h1 + h2)) * f[2]);
    for i in 1..n - 1 {
        let (h1, h2) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        d.push(
            -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] + h1 / (h2 * (h1 + h2)) * f[i + 1],
        );
    }
    let (h1, h2) = (x[n - 2] - x[n - 3], x[n - 1] - x[n - 2]);
    d.push(h2 / (h1 * (h1 + h2)) * f[n - 3] - (h1 + h2) / (h1 * h2) * f[n - 2] + (h1 + 2.0 * h2) / (h2 * (h1 + h2)) * f[n - 1]);
    d
}
