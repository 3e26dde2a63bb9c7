//! Two-time correlations `Re[e^{iE0 t} ⟨ψ0|σ e^{−iHt} σ|ψ0⟩]` from TEBD.
//!
//! For a real Hamiltonian and a real ground state the step operator `U`
//! is complex symmetric, so `r^T U^n r = (U^{⌊n/2⌋} r)^T (U^{⌈n/2⌉} r)`.
//! The folded evaluation uses this to reach time `t` with `t/2` of
//! evolution. σʸ is handled through the real matrix `τ = iσʸ`, whose
//! phase cancels between bra and ket.

use super::state::{bilinear, overlap, MpsState};
use super::tebd::{advance, tebd_evolve, EvolutionConfig, StepOperator, TRUNCATION_WARN};
use crate::error::{Error, Result};
use crate::model::{Direction, SpinHamiltonian};
use crate::tensor::{Scalar, C64};

/// Correlation values on the uniform grid `n·dt`, `n = 0..=t_max/dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorRun {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub max_renormalization: f64,
    pub cumulative_truncation: f64,
    pub max_bond_dim: usize,
    pub warnings: Vec<String>,
}

fn phase(e0: f64, t: f64) -> C64 {
    C64::new(0.0, e0 * t).exp()
}

/// Folded evaluation; needs a real Hamiltonian.
pub fn correlation_folded(
    psi0: &MpsState<f64>,
    e0: f64,
    h: &SpinHamiltonian,
    k: usize,
    mu: Direction,
    cfg: &EvolutionConfig,
) -> Result<CorrelatorRun> {
    cfg.validate()?;
    if !h.is_real() {
        return Err(Error::Unsupported(
            "folded correlator needs a real Hamiltonian; use correlation_direct".into(),
        ));
    }
    let m = match mu {
        Direction::X => [[0.0, 1.0], [1.0, 0.0]],
        Direction::Y => [[0.0, 1.0], [-1.0, 0.0]],
        Direction::Z => [[1.0, 0.0], [0.0, -1.0]],
    };
    let mut r = psi0.clone();
    r.apply_site_matrix(k, m)?;
    let r = r.to_complex();
    let rr = bilinear(&r, &r)?;
    let total = cfg.n_steps();
    let op = StepOperator::new(h, cfg.dt, cfg.trotter_order)?;

    let mut times = vec![0.0];
    let mut values = vec![1.0];
    let mut prev = r.clone();
    let mut cur = r;
    let mut max_renorm = 0.0f64;
    let mut capped = 0.0f64;
    let mut max_bond = cur.max_bond_dim();
    let mut n = 1;
    while n <= total {
        let (rn, cw) = advance(&op, &mut cur, 1, cfg.chi_max, cfg.svd_cutoff)?;
        max_renorm = max_renorm.max(rn);
        capped = capped.max(cw);
        max_bond = max_bond.max(cur.max_bond_dim());
        // n = 2m − 1 pairs (φ_{m−1}, φ_m); n = 2m pairs (φ_m, φ_m).
        for (nn, a) in [(n, &prev), (n + 1, &cur)] {
            if nn > total {
                break;
            }
            let t = nn as f64 * cfg.dt;
            let g = bilinear(a, &cur)? / rr;
            times.push(t);
            values.push((phase(e0, t) * g).re);
        }
        prev = cur.clone();
        n += 2;
    }
    let mut warnings = Vec::new();
    if capped > TRUNCATION_WARN {
        warnings.push(format!(
            "bond dimension cap {} hit with discarded weight {capped:.3e} in one gate",
            cfg.chi_max
        ));
    }
    Ok(CorrelatorRun {
        times,
        values,
        max_renormalization: max_renorm,
        cumulative_truncation: cur.cumulative_truncation,
        max_bond_dim: max_bond,
        warnings,
    })
}

/// Evolves `σψ0` over the full time range and overlaps with `σψ0`.
pub fn correlation_direct<T: Scalar>(
    psi0: &MpsState<T>,
    e0: f64,
    h: &SpinHamiltonian,
    k: usize,
    mu: Direction,
    cfg: &EvolutionConfig,
) -> Result<CorrelatorRun> {
    let phi0 = psi0.to_complex().apply_site_op(k, mu)?;
    let cfg = EvolutionConfig {
        sample_stride: 1,
        ..cfg.clone()
    };
    let mut times = Vec::new();
    let mut values = Vec::new();
    let n00 = overlap(&phi0, &phi0)?;
    let (_, traj) = tebd_evolve(&phi0, h, &cfg, |_, t, phi| {
        let g = overlap(&phi0, phi)? / n00;
        times.push(t);
        values.push((phase(e0, t) * g).re);
        Ok(())
    })?;
    Ok(CorrelatorRun {
        times,
        values,
        max_renormalization: traj.max_renormalization,
        cumulative_truncation: traj.cumulative_truncation,
        max_bond_dim: traj.max_bond_dim,
        warnings: traj.warnings,
    })
}
