//! Two-site DMRG ground-state search.

use faer::MatRef;

use super::env::{apply_two_site, extend_left, extend_right, left_boundary, right_boundary};
use super::state::MpsState;
use crate::error::{Error, Result};
use crate::model::{Direction, Mpo};
use crate::tensor::{contract, eigh, lanczos_lowest_with, svd_truncate, DenseTensor, LanczosOptions, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct DmrgConfig {
    pub chi_max: usize,
    /// Bond dimension of the first sweep; doubled each sweep up to `chi_max`.
    pub chi_start: usize,
    pub energy_tol: f64,
    pub max_sweeps: usize,
    pub svd_cutoff: f64,
    /// Strength `b` of a `−b Σσᶻ` term that favours the all-up sector.
    /// It is present during the sweeps only; the reported energy uses the
    /// unbiased MPO.
    pub bias_field: Option<f64>,
    /// Bias used instead of `bias_field` during the first
    /// `bias_warmup_sweeps` sweeps. A bias of order 1e-8 alone is too weak
    /// for local updates to leave a symmetric superposition.
    pub bias_warmup: f64,
    pub bias_warmup_sweeps: usize,
    pub seed: u64,
}

impl Default for DmrgConfig {
    fn default() -> Self {
        Self {
            chi_max: 64,
            chi_start: 16,
            energy_tol: 1e-10,
            max_sweeps: 30,
            svd_cutoff: 1e-10,
            bias_field: None,
            bias_warmup: 0.1,
            bias_warmup_sweeps: 2,
            seed: 0x5eed,
        }
    }
}

impl DmrgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chi_max == 0 || self.chi_start == 0 {
            return Err(Error::Validation("chi_max and chi_start must be at least 1".into()));
        }
        if !(self.energy_tol > 0.0) {
            return Err(Error::Validation(format!("energy_tol must be positive, got {}", self.energy_tol)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Validation("max_sweeps must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.svd_cutoff) {
            return Err(Error::Validation(format!("svd_cutoff {} outside [0, 1)", self.svd_cutoff)));
        }
        if let Some(b) = self.bias_field {
            if !b.is_finite() {
                return Err(Error::Validation("bias_field must be finite".into()));
            }
        }
        Ok(())
    }
}

/// One full (right then left) sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRecord {
    pub sweep: usize,
    pub chi: usize,
    /// Energy of the unbiased Hamiltonian after the sweep.
    pub energy: f64,
    pub max_discarded_weight: f64,
    pub max_local_residual: f64,
}

#[derive(Clone, Debug)]
pub struct DmrgResult<T> {
    pub state: MpsState<T>,
    pub e0: f64,
    pub sweep_log: Vec<SweepRecord>,
    /// False when `max_sweeps` ran out before `|ΔE| < energy_tol`.
    pub converged: bool,
}

struct Sweeper<'a, T: Scalar> {
    mpo: &'a Mpo<T>,
    psi: MpsState<T>,
    lenv: Vec<DenseTensor<T>>,
    renv: Vec<DenseTensor<T>>,
    chi: usize,
    cutoff: f64,
    max_discarded: f64,
    max_residual: f64,
}

impl<T: Scalar> Sweeper<'_, T> {
    fn rebuild_right(&mut self) -> Result<()> {
        let n = self.psi.n_sites();
        self.psi.move_center(0);
        self.renv[n] = right_boundary();
        for i in (1..n).rev() {
            self.renv[i] = extend_right(&self.renv[i + 1], &self.psi.tensors[i], self.mpo.site(i))?;
        }
        self.lenv[0] = left_boundary();
        Ok(())
    }

    /// Optimizes sites `(i, i+1)` with the center on one of them and
    /// leaves the center on `i+1` if `right`, else on `i`.
    fn update(&mut self, i: usize, right: bool) -> Result<f64> {
        let a = &self.psi.tensors[i];
        let b = &self.psi.tensors[i + 1];
        let theta = contract(a, b, &[(2, 0)])?;
        let shape = theta.shape().to_vec();
        let (l, r) = (&self.lenv[i], &self.renv[i + 2]);
        let (w1, w2) = (self.mpo.site(i), self.mpo.site(i + 1));
        let dim = theta.len();
        let opts = LanczosOptions {
            tol: 1e-10,
            max_iter: 200,
            krylov_dim: 24,
            start: Some(theta.into_data()),
            accept_unconverged: true,
            ..Default::default()
        };
        let mut failure = None;
        let res = lanczos_lowest_with(
            |x: &[T], y: &mut [T]| {
                let t = DenseTensor::new(shape.clone(), x.to_vec()).expect("shape");
                match apply_two_site(l, w1, w2, r, &t) {
                    Ok(out) => y.copy_from_slice(out.data()),
                    Err(e) => {
                        failure.get_or_insert(e);
                        y.iter_mut().for_each(|v| *v = T::zero());
                    }
                }
            },
            dim,
            &opts,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        self.max_residual = self.max_residual.max(res.residual);
        let (dl, dr) = (shape[0], shape[3]);
        let m = MatRef::from_row_major_slice(&res.v0, dl * 2, 2 * dr);
        let svd = svd_truncate(m, self.chi, self.cutoff)?;
        self.max_discarded = self.max_discarded.max(svd.report.discarded_weight);
        self.psi.cumulative_truncation += svd.report.discarded_weight;
        let k = svd.s.len();
        let snorm = svd.s.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut u = DenseTensor::from_mat(svd.u.as_ref());
        let mut vh = DenseTensor::from_mat(svd.vh.as_ref());
        if right {
            for r in 0..k {
                for c in 0..2 * dr {
                    let v = vh.get(&[r, c]).scale(svd.s[r] / snorm);
                    vh.set(&[r, c], v);
                }
            }
        } else {
            for r in 0..dl * 2 {
                for c in 0..k {
                    let v = u.get(&[r, c]).scale(svd.s[c] / snorm);
                    u.set(&[r, c], v);
                }
            }
        }
        self.psi.tensors[i] = u.reshape(vec![dl, 2, k])?;
        self.psi.tensors[i + 1] = vh.reshape(vec![k, 2, dr])?;
        if right {
            self.psi.center = i + 1;
            self.lenv[i + 1] = extend_left(&self.lenv[i], &self.psi.tensors[i], self.mpo.site(i))?;
        } else {
            self.psi.center = i;
            self.renv[i + 1] = extend_right(&self.renv[i + 2], &self.psi.tensors[i + 1], self.mpo.site(i + 1))?;
        }
        Ok(res.e0)
    }

    fn sweep(&mut self) -> Result<()> {
        let n = self.psi.n_sites();
        self.max_discarded = 0.0;
        self.max_residual = 0.0;
        for i in 0..n - 1 {
            self.update(i, true)?;
        }
        for i in (0..n - 1).rev() {
            self.update(i, false)?;
        }
        Ok(())
    }
}

/// Ground state of `mpo` by two-site sweeps from a seeded random state.
///
/// Sweeps stop once the unbiased energy changes by less than
/// `energy_tol` between sweeps at full bond dimension. Running out of
/// sweeps is reported through `converged`, not as an error.
pub fn dmrg_ground<T: Scalar>(mpo: &Mpo<T>, cfg: &DmrgConfig) -> Result<DmrgResult<T>> {
    cfg.validate()?;
    let n = mpo.n_sites();
    if n == 1 {
        return single_site(mpo);
    }
    let biased = |b: f64| mpo.with_uniform_field(Direction::Z, -b);
    let warm = match cfg.bias_field {
        Some(b) => Some(biased(b.abs().max(cfg.bias_warmup).copysign(b))?),
        None => None,
    };
    let fine = match cfg.bias_field {
        Some(b) => Some(biased(b)?),
        None => None,
    };

    let chi0 = cfg.chi_start.min(cfg.chi_max);
    let psi = MpsState::<T>::random(n, chi0, cfg.seed)?;
    let mut log = Vec::new();
    let mut converged = false;
    let mut prev: Option<f64> = None;
    let mut chi = chi0;
    let mut state = psi;
    let mut cumulative = 0.0;

    for sweep in 0..cfg.max_sweeps {
        let warmup = sweep < cfg.bias_warmup_sweeps;
        let active = match (&warm, &fine) {
            (Some(w), _) if warmup => w,
            (_, Some(f)) => f,
            _ => mpo,
        };
        let mut sw = Sweeper {
            mpo: active,
            psi: state,
            lenv: vec![left_boundary(); n + 1],
            renv: vec![right_boundary(); n + 1],
            chi,
            cutoff: cfg.svd_cutoff,
            max_discarded: 0.0,
            max_residual: 0.0,
        };
        sw.psi.cumulative_truncation = cumulative;
        sw.rebuild_right()?;
        sw.sweep()?;
        state = sw.psi;
        cumulative = state.cumulative_truncation;
        let energy = state.expectation(mpo)?.re();
        log.push(SweepRecord {
            sweep,
            chi,
            energy,
            max_discarded_weight: sw.max_discarded,
            max_local_residual: sw.max_residual,
        });
        let at_full = chi == cfg.chi_max;
        if let Some(p) = prev {
            if at_full && !warmup && (energy - p).abs() < cfg.energy_tol {
                converged = true;
                break;
            }
        }
        prev = Some(energy);
        chi = (chi * 2).min(cfg.chi_max);
    }
    state.normalize()?;
    let e0 = state.expectation(mpo)?.re();
    Ok(DmrgResult {
        state,
        e0,
        sweep_log: log,
        converged,
    })
}

fn single_site<T: Scalar>(mpo: &Mpo<T>) -> Result<DmrgResult<T>> {
    let w = mpo.site(0);
    let h = faer::Mat::<T>::from_fn(2, 2, |s, t| w.get(&[0, s, t, 0]));
    let (vals, vecs) = eigh(h.as_ref())?;
    let state = MpsState::product(&[[vecs[(0, 0)], vecs[(1, 0)]]])?;
    Ok(DmrgResult {
        state,
        e0: vals[0],
        sweep_log: vec![SweepRecord {
            sweep: 0,
            chi: 1,
            energy: vals[0],
            max_discarded_weight: 0.0,
            max_local_residual: 0.0,
        }],
        converged: true,
    })
}
