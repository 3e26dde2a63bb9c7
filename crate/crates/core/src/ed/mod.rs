//! Exact diagonalization reference for chains of up to 14 sites.
//!
//! Up to [`FULL_SPECTRUM_SITES`] sites the full spectrum is computed once
//! and every time evolution is spectral, which keeps phases at machine
//! precision. Larger chains use Lanczos for the low levels and Krylov
//! propagation for dynamics, both matrix-free.

mod identities;

use faer::Mat;

pub use identities::{
    conjugation_identity_check, conjugation_identity_deviation, first_order_approx,
    first_order_approx_hf, hellmann_feynman_check, second_order_correction, stationarity_check,
    HfCheck,
};

use crate::correlator::{CorrelationSeries, Engine, SeriesMeta};
use crate::error::{Error, Result};
use crate::model::{apply_site_pauli, Direction, PauliSum, SpinHamiltonian, MAX_DENSE_SITES};
use crate::tensor::{
    eigh, expm_krylov, inner, lanczos_lowest_with, norm, ExpmOptions, LanczosOptions, C64,
};

/// Chains up to this size are diagonalized in full.
pub const FULL_SPECTRUM_SITES: usize = 10;

/// Gaps below this are treated as degeneracies.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct EdGroundState {
    pub e0: f64,
    pub psi0: Vec<C64>,
    /// `e1 − e0`, zero for a one-dimensional space.
    pub degeneracy_gap: f64,
    pub degenerate: bool,
    /// `‖H·ψ0 − e0·ψ0‖`
    pub residual: f64,
}

#[derive(Clone, Debug)]
enum Spectrum {
    Real { vals: Vec<f64>, vecs: Mat<f64> },
    Complex { vals: Vec<f64>, vecs: Mat<C64> },
}

impl Spectrum {
    fn vals(&self) -> &[f64] {
        match self {
            Spectrum::Real { vals, .. } | Spectrum::Complex { vals, .. } => vals,
        }
    }

    fn col(&self, k: usize) -> Vec<C64> {
        match self {
            Spectrum::Real { vecs, .. } => (0..vecs.nrows()).map(|i| C64::new(vecs[(i, k)], 0.0)).collect(),
            Spectrum::Complex { vecs, .. } => (0..vecs.nrows()).map(|i| vecs[(i, k)]).collect(),
        }
    }

    /// Coefficients `⟨n|φ⟩` in the eigenbasis.
    fn project(&self, phi: &[C64]) -> Vec<C64> {
        let d = phi.len();
        match self {
            Spectrum::Real { vecs, .. } => (0..d)
                .map(|k| (0..d).map(|i| phi[i] * vecs[(i, k)]).sum())
                .collect(),
            Spectrum::Complex { vecs, .. } => (0..d)
                .map(|k| (0..d).map(|i| vecs[(i, k)].conj() * phi[i]).sum())
                .collect(),
        }
    }

    /// `Σ_n c_n |n⟩`
    fn expand(&self, c: &[C64]) -> Vec<C64> {
        let d = c.len();
        match self {
            Spectrum::Real { vecs, .. } => (0..d)
                .map(|i| (0..d).map(|k| c[k] * vecs[(i, k)]).sum())
                .collect(),
            Spectrum::Complex { vecs, .. } => (0..d)
                .map(|i| (0..d).map(|k| vecs[(i, k)] * c[k]).sum())
                .collect(),
        }
    }
}

/// A Hamiltonian together with its exact ground state and the machinery
/// to propagate states under it.
#[derive(Clone, Debug)]
pub struct EdSystem {
    h: SpinHamiltonian,
    op: PauliSum,
    spectrum: Option<Spectrum>,
    ground: EdGroundState,
}

/// Rotates `v` so that its largest-magnitude entry (first on ties) is
/// real and positive.
fn fix_phase(v: &mut [C64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.norm_sqr() > v[best].norm_sqr() * (1.0 + 1e-10) {
            best = i;
        }
    }
    let p = v[best];
    if p.norm() > 0.0 {
        let ph = p.conj() / p.norm();
        v.iter_mut().for_each(|x| *x *= ph);
    }
}

/// Within a degenerate manifold, the normalized projection of `|↑…↑⟩`
/// (basis index 0), or the first vector if that projection vanishes.
fn select_in_manifold(manifold: &[Vec<C64>]) -> Vec<C64> {
    let d = manifold[0].len();
    let mut v = vec![C64::new(0.0, 0.0); d];
    for m in manifold {
        let c = m[0].conj();
        for (vi, mi) in v.iter_mut().zip(m) {
            *vi += c * mi;
        }
    }
    let nv = norm(&v);
    if nv > 1e-8 {
        v.iter_mut().for_each(|x| *x /= nv);
        v
    } else {
        manifold[0].clone()
    }
}

impl EdSystem {
    pub fn new(h: &SpinHamiltonian) -> Result<Self> {
        let n = h.n_sites();
        if n > MAX_DENSE_SITES {
            return Err(Error::ResourceGuard(format!(
                "exact diagonalization needs n_sites <= {MAX_DENSE_SITES}, got {n}"
            )));
        }
        let op = h.pauli_sum();
        let (spectrum, mut psi0, e0, e1) = if n <= FULL_SPECTRUM_SITES {
            let spectrum = match h.to_dense_real()? {
                Some(m) => {
                    let (vals, vecs) = eigh(m.as_ref())?;
                    Spectrum::Real { vals, vecs }
                }
                None => {
                    let (vals, vecs) = eigh(h.to_dense()?.as_ref())?;
                    Spectrum::Complex { vals, vecs }
                }
            };
            let vals = spectrum.vals();
            let e0 = vals[0];
            let e1 = vals.get(1).copied().unwrap_or(e0);
            let tol = DEGENERACY_TOL * e0.abs().max(1.0);
            let manifold: Vec<Vec<C64>> = (0..vals.len())
                .take_while(|&k| vals[k] - e0 <= tol)
                .map(|k| spectrum.col(k))
                .collect();
            let psi0 = select_in_manifold(&manifold);
            (Some(spectrum), psi0, e0, e1)
        } else {
            let (psi0, e0, psi1, e1) = lowest_two(&op)?;
            let psi0 = if e1 - e0 <= DEGENERACY_TOL * e0.abs().max(1.0) {
                select_in_manifold(&[psi0, psi1])
            } else {
                psi0
            };
            (None, psi0, e0, e1)
        };
        fix_phase(&mut psi0);
        let mut hpsi = vec![C64::new(0.0, 0.0); psi0.len()];
        op.apply(&psi0, &mut hpsi);
        let residual = hpsi
            .iter()
            .zip(&psi0)
            .map(|(a, b)| (a - b * e0).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let gap = e1 - e0;
        Ok(Self {
            h: h.clone(),
            op,
            spectrum,
            ground: EdGroundState {
                e0,
                psi0,
                degeneracy_gap: gap,
                degenerate: gap <= DEGENERACY_TOL * e0.abs().max(1.0),
                residual,
            },
        })
    }

    pub fn hamiltonian(&self) -> &SpinHamiltonian {
        &self.h
    }

    pub fn ground(&self) -> &EdGroundState {
        &self.ground
    }

    pub fn n_sites(&self) -> usize {
        self.h.n_sites()
    }

    pub fn dim(&self) -> usize {
        1 << self.h.n_sites()
    }

    /// Eigenvalues, when the full spectrum was computed.
    pub fn spectrum(&self) -> Option<&[f64]> {
        self.spectrum.as_ref().map(|s| s.vals())
    }

    /// `H·x`
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        self.op.apply(x, &mut y);
        y
    }

    /// `e^{−iHt}·φ`
    pub fn evolve(&self, phi: &[C64], t: f64) -> Result<Vec<C64>> {
        match &self.spectrum {
            Some(s) => {
                let vals = s.vals();
                let mut c = s.project(phi);
                for (ck, &e) in c.iter_mut().zip(vals) {
                    *ck *= C64::new(0.0, -e * t).exp();
                }
                Ok(s.expand(&c))
            }
            None => expm_krylov(
                |x, y| self.op.apply(x, y),
                phi,
                C64::new(0.0, -t),
                &ExpmOptions::default(),
            ),
        }
    }

    /// `σ_k^μ·ψ0`
    pub fn excite(&self, k: usize, mu: Direction) -> Result<Vec<C64>> {
        if k >= self.n_sites() {
            return Err(Error::Validation(format!(
                "site {k} outside [0, {})",
                self.n_sites()
            )));
        }
        Ok(apply_site_pauli(&self.ground.psi0, self.n_sites(), k, mu))
    }

    /// `C(t) = Re[e^{iE0 t} ⟨ψ0|σ e^{−iHt} σ|ψ0⟩]` on `times`, plus the
    /// largest imaginary part of the literally symmetrized form
    /// `½(⟨σ(t)σ⟩ + ⟨σσ(t)⟩)`.
    pub fn correlation_values(
        &self,
        k: usize,
        mu: Direction,
        times: &[f64],
    ) -> Result<(Vec<f64>, f64)> {
        let phi = self.excite(k, mu)?;
        let e0 = self.ground.e0;
        let mut values = Vec::with_capacity(times.len());
        let mut residue = 0.0f64;
        match &self.spectrum {
            Some(s) => {
                let w: Vec<f64> = s.project(&phi).iter().map(|c| c.norm_sqr()).collect();
                let vals = s.vals();
                for &t in times {
                    // ⟨σ(t)σ⟩ and ⟨σσ(t)⟩ summed independently.
                    let mut fwd = C64::new(0.0, 0.0);
                    let mut bwd = C64::new(0.0, 0.0);
                    for (wk, &ek) in w.iter().zip(vals) {
                        fwd += C64::new(0.0, (e0 - ek) * t).exp() * *wk;
                        bwd += C64::new(0.0, (ek - e0) * t).exp() * *wk;
                    }
                    values.push(fwd.re);
                    residue = residue.max(((fwd + bwd) * 0.5).im.abs());
                }
            }
            None => {
                let mut cur = phi.clone();
                let mut t_prev = 0.0;
                for &t in times {
                    if t < t_prev {
                        return Err(Error::Validation("time grid must be nondecreasing".into()));
                    }
                    if t > t_prev {
                        cur = self.evolve(&cur, t - t_prev)?;
                        t_prev = t;
                    }
                    let ph = C64::new(0.0, e0 * t).exp();
                    let fwd = ph * inner(&phi, &cur);
                    let bwd = ph.conj() * inner(&cur, &phi);
                    values.push(fwd.re);
                    residue = residue.max(((fwd + bwd) * 0.5).im.abs());
                }
            }
        }
        Ok((values, residue))
    }
}

/// Two lowest eigenpairs via Lanczos with deflation.
fn lowest_two(op: &PauliSum) -> Result<(Vec<C64>, f64, Vec<C64>, f64)> {
    let dim = op.dim();
    let base = LanczosOptions::<C64> {
        tol: 1e-11,
        max_iter: 20_000,
        krylov_dim: 60,
        ..Default::default()
    };
    if op.is_real() {
        let opts = LanczosOptions::<f64> {
            tol: base.tol,
            max_iter: base.max_iter,
            krylov_dim: base.krylov_dim,
            ..Default::default()
        };
        let r0 = lanczos_lowest_with(|x, y| op.apply_real(x, y), dim, &opts)?;
        let opts1 = LanczosOptions {
            deflate: vec![r0.v0.clone()],
            seed: opts.seed + 1,
            ..opts
        };
        let r1 = lanczos_lowest_with(|x, y| op.apply_real(x, y), dim, &opts1)?;
        let c = |v: Vec<f64>| v.into_iter().map(|x| C64::new(x, 0.0)).collect();
        Ok((c(r0.v0), r0.e0, c(r1.v0), r1.e0))
    } else {
        let r0 = lanczos_lowest_with(|x, y| op.apply(x, y), dim, &base)?;
        let opts1 = LanczosOptions {
            deflate: vec![r0.v0.clone()],
            seed: base.seed + 1,
            ..base
        };
        let r1 = lanczos_lowest_with(|x, y| op.apply(x, y), dim, &opts1)?;
        Ok((r0.v0, r0.e0, r1.v0, r1.e0))
    }
}

/// Ground state of `h` by exact diagonalization.
pub fn ed_ground(h: &SpinHamiltonian) -> Result<EdGroundState> {
    Ok(EdSystem::new(h)?.ground)
}

/// Exact two-time correlation series on `times`.
pub fn ed_correlation(
    sys: &EdSystem,
    k: usize,
    mu: Direction,
    times: &[f64],
) -> Result<CorrelationSeries> {
    let (values, residue) = sys.correlation_values(k, mu, times)?;
    let meta = SeriesMeta::for_hamiltonian(sys.hamiltonian(), k, mu, Engine::Ed, None, None);
    CorrelationSeries::new(times.to_vec(), values, meta, residue)
}
