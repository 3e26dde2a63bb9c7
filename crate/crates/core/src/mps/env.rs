//! MPO environments and the effective two-site operator.
//!
//! Left environments are indexed `L[a, w, a']` with `a` on the bra and `a'`
//! on the ket; right environments likewise `R[b, w, b']`.

use crate::error::Result;
use crate::tensor::{contract, DenseTensor, Scalar};

pub(crate) fn left_boundary<T: Scalar>() -> DenseTensor<T> {
    DenseTensor::new(vec![1, 1, 1], vec![T::one()]).expect("unit tensor")
}

pub(crate) fn right_boundary<T: Scalar>() -> DenseTensor<T> {
    left_boundary()
}

/// Absorbs site tensor `a` and MPO tensor `w` into a left environment.
pub(crate) fn extend_left<T: Scalar>(
    l: &DenseTensor<T>,
    a: &DenseTensor<T>,
    w: &DenseTensor<T>,
) -> Result<DenseTensor<T>> {
    let y1 = contract(l, a, &[(2, 0)])?; // [a, w, s, b']
    let y2 = contract(&y1, w, &[(1, 0), (2, 2)])?; // [a, b', s_out, w']
    let y3 = contract(&a.conj(), &y2, &[(0, 0), (1, 2)])?; // [b, b', w']
    y3.permute(&[0, 2, 1])
}

/// Absorbs site tensor `b` and MPO tensor `w` into a right environment.
pub(crate) fn extend_right<T: Scalar>(
    r: &DenseTensor<T>,
    b: &DenseTensor<T>,
    w: &DenseTensor<T>,
) -> Result<DenseTensor<T>> {
    let z1 = contract(b, r, &[(2, 2)])?; // [a', s, b, w]
    let z2 = contract(w, &z1, &[(2, 1), (3, 3)])?; // [w0, s_out, a', b]
    contract(&b.conj(), &z2, &[(1, 1), (2, 3)]) // [a, w0, a']
}

/// `H_eff · θ` for a two-site tensor `θ[a', s, t, b']`.
pub(crate) fn apply_two_site<T: Scalar>(
    l: &DenseTensor<T>,
    w1: &DenseTensor<T>,
    w2: &DenseTensor<T>,
    r: &DenseTensor<T>,
    theta: &DenseTensor<T>,
) -> Result<DenseTensor<T>> {
    let x1 = contract(l, theta, &[(2, 0)])?; // [a, w, s, t, b']
    let x2 = contract(&x1, w1, &[(1, 0), (2, 2)])?; // [a, t, b', s', w1]
    let x3 = contract(&x2, w2, &[(4, 0), (1, 2)])?; // [a, b', s', t', w2]
    contract(&x3, r, &[(1, 2), (4, 1)]) // [a, s', t', b]
}
