//! Exact identities linking two-time correlations to ground-state data,
//! checked on the full Hilbert space.

use super::EdSystem;
use crate::error::{Error, Result};
use crate::model::{build_fk, build_general, Direction, ModelFamily, PauliTerm, SpinHamiltonian};
use crate::tensor::{inner, C64};

/// `|C(t1,t2) − C(0, t2−t1)|` with `C(ti,tj) = ½⟨{Q(ti),Q(tj)}⟩` and
/// `Q(t) = e^{iHt} σ_k^μ e^{−iHt}`, each side evaluated by literal
/// propagation of the ground state.
pub fn stationarity_check(sys: &EdSystem, k: usize, mu: Direction, t1: f64, t2: f64) -> Result<f64> {
    if t1 > t2 {
        return Err(Error::Validation(format!("need t1 <= t2, got {t1} > {t2}")));
    }
    let psi = &sys.ground().psi0;
    let n = sys.n_sites();
    // Q(t)|ψ⟩ = e^{iHt} σ e^{−iHt} |ψ⟩
    let q_of_t = |t: f64| -> Result<Vec<C64>> {
        let a = sys.evolve(psi, t)?;
        let b = crate::model::apply_site_pauli(&a, n, k, mu);
        sys.evolve(&b, -t)
    };
    let sym = |a: &[C64], b: &[C64]| inner(a, b).re;
    let lhs = sym(&q_of_t(t1)?, &q_of_t(t2)?);
    let rhs = sym(&q_of_t(0.0)?, &q_of_t(t2 - t1)?);
    Ok((lhs - rhs).abs())
}

/// Largest entry of `|σ H σ − (H − f)|` for a caller-supplied `f`.
pub fn conjugation_identity_deviation(
    h: &SpinHamiltonian,
    f: &SpinHamiltonian,
    k: usize,
    mu: Direction,
) -> Result<f64> {
    let n = h.n_sites();
    if n > 10 {
        return Err(Error::ResourceGuard(format!(
            "conjugation identity check limited to 10 sites, got {n}"
        )));
    }
    if f.n_sites() != n || k >= n {
        return Err(Error::Validation("site or size mismatch in conjugation check".into()));
    }
    let hd = h.to_dense()?;
    let fd = f.to_dense()?;
    let s = PauliTerm::new(n, 1.0, &[(k, mu)]);
    let d = 1usize << n;
    let mut worst = 0.0f64;
    for b in 0..d {
        let (bf, pb) = s.act(b as u64);
        for a in 0..d {
            let (af, _) = s.act(a as u64);
            // σ[a, a⊕f] = phase of σ acting on a⊕f
            let (_, pa) = s.act(af);
            let lhs = pa * hd[(af as usize, bf as usize)] * pb;
            let rhs = hd[(a, b)] - fd[(a, b)];
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(worst)
}

/// [`conjugation_identity_deviation`] with `f = build_fk(h, k, μ)`.
pub fn conjugation_identity_check(h: &SpinHamiltonian, k: usize, mu: Direction) -> Result<f64> {
    let f = build_fk(h, k, mu)?;
    conjugation_identity_deviation(h, &f, k, mu)
}

#[derive(Clone, Copy, Debug)]
pub struct HfCheck {
    /// `⟨ψ0|∂H/∂λ|ψ0⟩`
    pub expectation: f64,
    /// Central difference of E0 with step δ.
    pub finite_difference: f64,
    /// Richardson combination of steps δ and 2δ.
    pub richardson: f64,
    /// `|expectation − finite_difference|`
    pub residual: f64,
    /// Set when any of the ground states involved is degenerate, where
    /// the theorem does not apply.
    pub degenerate: bool,
}

/// Hellmann-Feynman check along the family parameter at `lambda`.
pub fn hellmann_feynman_check(
    family: &ModelFamily,
    n: usize,
    lambda: f64,
    dlambda: f64,
) -> Result<HfCheck> {
    if !(dlambda > 0.0) {
        return Err(Error::Validation(format!("dlambda must be positive, got {dlambda}")));
    }
    let solve = |l: f64| EdSystem::new(&family.build(n, l)?);
    let sys = solve(lambda)?;
    let dh = family.derivative(n)?.pauli_sum();
    let expectation = dh.expectation(&sys.ground().psi0);
    let mut degenerate = sys.ground().degenerate;
    let mut e = |l: f64| -> Result<f64> {
        let s = solve(l)?;
        degenerate |= s.ground().degenerate;
        Ok(s.ground().e0)
    };
    let fd1 = (e(lambda + dlambda)? - e(lambda - dlambda)?) / (2.0 * dlambda);
    let fd2 = (e(lambda + 2.0 * dlambda)? - e(lambda - 2.0 * dlambda)?) / (4.0 * dlambda);
    Ok(HfCheck {
        expectation,
        finite_difference: fd1,
        richardson: (4.0 * fd1 - fd2) / 3.0,
        residual: (expectation - fd1).abs(),
        degenerate,
    })
}

/// `cos(E0 t) + sin(E0 t)·(E0 t − t·⟨f⟩)` with `⟨f⟩` taken directly in
/// the ground state.
pub fn first_order_approx(sys: &EdSystem, k: usize, mu: Direction, t: f64) -> Result<f64> {
    let f = build_fk(sys.hamiltonian(), k, mu)?;
    let fexp = f.pauli_sum().expectation(&sys.ground().psi0);
    Ok(first_order_formula(sys.ground().e0, fexp, t))
}

fn first_order_formula(e0: f64, fexp: f64, t: f64) -> f64 {
    (e0 * t).cos() + (e0 * t).sin() * (e0 * t - t * fexp)
}

/// Same expansion with `⟨f⟩` assembled from energy derivatives,
/// `2 Σ_{α≠μ} (Σ_j J_α^{jk} ∂E0/∂J_α^{jk} + B_α^k ∂E0/∂B_α^k)`, each
/// derivative a central difference of exact ground energies.
pub fn first_order_approx_hf(
    sys: &EdSystem,
    k: usize,
    mu: Direction,
    t: f64,
    step: f64,
) -> Result<f64> {
    let h = sys.hamiltonian();
    let n = h.n_sites();
    let e_with = |dc: Option<((Direction, usize, usize), f64)>,
                  df: Option<((Direction, usize), f64)>|
     -> Result<f64> {
        let delta = build_general(n, dc, df)?;
        Ok(EdSystem::new(&h.plus(&delta)?)?.ground().e0)
    };
    let mut fexp = 0.0;
    for ((a, i, j), v) in h.couplings() {
        if a != mu && (i == k || j == k) {
            let de = (e_with(Some(((a, i, j), step)), None)?
                - e_with(Some(((a, i, j), -step)), None)?)
                / (2.0 * step);
            fexp += 2.0 * v * de;
        }
    }
    for ((a, i), v) in h.fields() {
        if a != mu && i == k {
            let de = (e_with(None, Some(((a, i), step)))? - e_with(None, Some(((a, i), -step)))?)
                / (2.0 * step);
            fexp += 2.0 * v * de;
        }
    }
    Ok(first_order_formula(sys.ground().e0, fexp, t))
}

/// `−(t²/2)·cos(E0 t)·(E0² − 2E0⟨f⟩ + ⟨f²⟩)`
pub fn second_order_correction(sys: &EdSystem, k: usize, mu: Direction, t: f64) -> Result<f64> {
    let f = build_fk(sys.hamiltonian(), k, mu)?.pauli_sum();
    let psi = &sys.ground().psi0;
    let mut fpsi = vec![C64::new(0.0, 0.0); psi.len()];
    f.apply(psi, &mut fpsi);
    let fexp = inner(psi, &fpsi).re;
    let f2 = inner(&fpsi, &fpsi).re;
    let e0 = sys.ground().e0;
    Ok(-(t * t / 2.0) * (e0 * t).cos() * (e0 * e0 - 2.0 * e0 * fexp + f2))
}
