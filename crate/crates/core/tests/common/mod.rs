//! Reference constructions shared by the integration tests. Everything here
//! is written from first principles (Kronecker products, RK4) and does not
//! call into the library's Hamiltonian or evolution code.

#![allow(dead_code)]

use faer::{Mat, Side};
use lgprobe::tensor::C64;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Single-site Pauli matrix in the (↑, ↓) basis: 0 = x, 1 = y, 2 = z.
pub fn pauli(a: usize) -> [[C64; 2]; 2] {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match a {
        0 => [[z, o], [o, z]],
        1 => [[z, -i], [i, z]],
        _ => [[o, z], [z, -o]],
    }
}

fn kron(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    let (ra, ca, rb, cb) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

/// `⊗_k op_k` with site 0 leftmost; sites not listed carry the identity.
pub fn embed(n: usize, ops: &[(usize, usize)]) -> Mat<C64> {
    let mut m = Mat::from_fn(1, 1, |_, _| c(1.0, 0.0));
    for site in 0..n {
        let local = match ops.iter().find(|(s, _)| *s == site) {
            Some(&(_, a)) => {
                let p = pauli(a);
                Mat::from_fn(2, 2, |i, j| p[i][j])
            }
            None => Mat::from_fn(2, 2, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }),
        };
        m = kron(&m, &local);
    }
    m
}

fn add_scaled(acc: &mut Mat<C64>, m: &Mat<C64>, s: f64) {
    for j in 0..acc.ncols() {
        for i in 0..acc.nrows() {
            acc[(i, j)] += m[(i, j)] * s;
        }
    }
}

/// Open chain with per-bond couplings `(jx, jy, jz)` and a uniform z field.
pub fn chain(n: usize, jx: f64, jy: f64, jz: f64, hz: f64) -> Mat<C64> {
    let d = 1 << n;
    let mut h = Mat::<C64>::zeros(d, d);
    for i in 0..n - 1 {
        for (a, coef) in [(0, jx), (1, jy), (2, jz)] {
            if coef != 0.0 {
                add_scaled(&mut h, &embed(n, &[(i, a), (i + 1, a)]), coef);
            }
        }
    }
    if hz != 0.0 {
        for i in 0..n {
            add_scaled(&mut h, &embed(n, &[(i, 2)]), hz);
        }
    }
    h
}

pub fn xxz(n: usize, delta: f64) -> Mat<C64> {
    chain(n, 1.0, 1.0, delta, 0.0)
}

pub fn xy(n: usize, gamma: f64, nu: f64) -> Mat<C64> {
    chain(n, (1.0 + gamma) / 2.0, (1.0 - gamma) / 2.0, 0.0, nu)
}

pub fn matvec(m: &Mat<C64>, x: &[C64]) -> Vec<C64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum()).collect()
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn max_abs_diff(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
    let mut w = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            w = w.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    w
}

/// Lowest eigenpair and the gap to the next level.
pub fn ground(h: &Mat<C64>) -> (f64, Vec<C64>, f64) {
    let evd = h.self_adjoint_eigen(Side::Lower).unwrap();
    let s = evd.S().column_vector();
    let u = evd.U();
    let v = (0..h.nrows()).map(|i| u[(i, 0)]).collect();
    (s[0].re, v, s[1].re - s[0].re)
}

/// Nonzero entries of `m` as `(row, col, value)`.
fn nonzeros(m: &Mat<C64>) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)].norm() != 0.0 {
                out.push((i, j, m[(i, j)]));
            }
        }
    }
    out
}

/// `e^{−iHt} x` by fixed-step fourth-order Runge-Kutta.
pub fn rk4(h: &Mat<C64>, x: &[C64], t: f64, steps: usize) -> Vec<C64> {
    let dt = t / steps as f64;
    let mi = c(0.0, -1.0);
    let nz = nonzeros(h);
    let f = |v: &[C64]| -> Vec<C64> {
        let mut y = vec![c(0.0, 0.0); v.len()];
        for &(i, j, a) in &nz {
            y[i] += a * v[j] * mi;
        }
        y
    };
    let comb = |a: &[C64], b: &[C64], s: f64| -> Vec<C64> { a.iter().zip(b).map(|(p, q)| p + q * s).collect() };
    let mut y = x.to_vec();
    for _ in 0..steps {
        let k1 = f(&y);
        let k2 = f(&comb(&y, &k1, dt / 2.0));
        let k3 = f(&comb(&y, &k2, dt / 2.0));
        let k4 = f(&comb(&y, &k3, dt));
        for i in 0..y.len() {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
    }
    y
}

/// `C(t) = Re[e^{iE0 t} ⟨σψ0| e^{−iHt} |σψ0⟩]` on `times` (ascending),
/// propagated step by step with RK4.
pub fn correlation_rk4(h: &Mat<C64>, n: usize, k: usize, a: usize, times: &[f64], dt: f64) -> Vec<f64> {
    let (e0, psi, _) = ground(h);
    let s = embed(n, &[(k, a)]);
    let phi = matvec(&s, &psi);
    let mut cur = phi.clone();
    let mut t_now = 0.0;
    let mut out = Vec::new();
    for &t in times {
        let steps = ((t - t_now) / dt).round() as usize;
        if steps > 0 {
            cur = rk4(h, &cur, t - t_now, steps);
        }
        t_now = t;
        out.push((c(0.0, e0 * t).exp() * dot(&phi, &cur)).re);
    }
    out
}
