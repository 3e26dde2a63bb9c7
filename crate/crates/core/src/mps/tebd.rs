//! Real-time evolution by Trotterized two-site gates.
//!
//! The bond Hamiltonian `h_b` of bond `(i, i+1)` carries its couplings plus
//! half of the on-site fields of each interior site and the full fields of
//! the chain ends. Layer A holds the bonds starting at even sites, layer B
//! the rest. Both supported orders use palindromic layer sequences of
//! symmetric gates, so for a real Hamiltonian the one-step operator equals
//! its own transpose.

use faer::{Mat, MatRef};

use super::state::MpsState;
use crate::error::{Error, Result};
use crate::model::{Direction, SpinHamiltonian};
use crate::tensor::{contract, eigh, svd_truncate, DenseTensor, C64};

/// Discarded weight per gate above which a capped truncation is reported.
pub const TRUNCATION_WARN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionConfig {
    /// Time step in units of 1/J.
    pub dt: f64,
    pub t_max: f64,
    /// 2 (Strang splitting) or 4 (Suzuki composition of five Strang steps).
    pub trotter_order: u32,
    pub chi_max: usize,
    pub svd_cutoff: f64,
    /// Observers run every `sample_stride` steps and at `t = 0`.
    pub sample_stride: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_max: 3.0,
            trotter_order: 4,
            chi_max: 64,
            svd_cutoff: 1e-14,
            sample_stride: 1,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Validation(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::Validation(format!("t_max must be nonnegative, got {}", self.t_max)));
        }
        if self.chi_max == 0 {
            return Err(Error::Validation("chi_max must be at least 1".into()));
        }
        if !matches!(self.trotter_order, 2 | 4) {
            return Err(Error::Validation(format!(
                "trotter_order must be 2 or 4, got {}",
                self.trotter_order
            )));
        }
        if !(0.0..1.0).contains(&self.svd_cutoff) {
            return Err(Error::Validation(format!("svd_cutoff {} outside [0, 1)", self.svd_cutoff)));
        }
        if self.sample_stride == 0 {
            return Err(Error::Validation("sample_stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps needed to reach `t_max`, rounding to the nearest
    /// whole step.
    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }
}

/// Summary of one evolution run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub steps: usize,
    /// Times at which the observer ran.
    pub sample_times: Vec<f64>,
    /// Largest `|1 − ‖ψ‖|` removed by renormalization after a gate.
    pub max_renormalization: f64,
    pub cumulative_truncation: f64,
    pub max_bond_dim: usize,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Layer {
    A,
    B,
}

fn layer_sequence(order: u32) -> Vec<(Layer, f64)> {
    match order {
        2 => vec![(Layer::A, 0.5), (Layer::B, 1.0), (Layer::A, 0.5)],
        _ => {
            let p = 1.0 / (4.0 - 4f64.powf(1.0 / 3.0));
            let q = 1.0 - 4.0 * p;
            let h = (1.0 - 3.0 * p) / 2.0;
            vec![
                (Layer::A, p / 2.0),
                (Layer::B, p),
                (Layer::A, p),
                (Layer::B, p),
                (Layer::A, h),
                (Layer::B, q),
                (Layer::A, h),
                (Layer::B, p),
                (Layer::A, p),
                (Layer::B, p),
                (Layer::A, p / 2.0),
            ]
        }
    }
}

/// 4×4 bond Hamiltonians indexed `[s s', t t']` with `s` on the left site.
fn bond_hamiltonians(h: &SpinHamiltonian) -> Result<Vec<Mat<C64>>> {
    let n = h.n_sites();
    if n < 2 {
        return Err(Error::Validation("time evolution needs at least 2 sites".into()));
    }
    if !h.is_nearest_neighbor() {
        return Err(Error::Unsupported("TEBD needs nearest-neighbour couplings".into()));
    }
    let add_kron = |m: &mut Mat<C64>, x: f64, a: [[C64; 2]; 2], b: [[C64; 2]; 2]| {
        for r in 0..4 {
            for c in 0..4 {
                m[(r, c)] += a[r / 2][c / 2] * b[r % 2][c % 2] * x;
            }
        }
    };
    let id = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]];
    let weight = |site: usize| if site == 0 || site == n - 1 { 1.0 } else { 0.5 };
    let mut out = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let mut m = Mat::<C64>::zeros(4, 4);
        for a in Direction::ALL {
            let p = a.pauli();
            add_kron(&mut m, h.coupling(a, i, i + 1), p, p);
            add_kron(&mut m, h.field(a, i) * weight(i), p, id);
            add_kron(&mut m, h.field(a, i + 1) * weight(i + 1), id, p);
        }
        out.push(m);
    }
    Ok(out)
}

/// `exp(−i h x)` as a gate tensor `G[s', t', s, t]`.
fn gate(h: MatRef<'_, C64>, x: f64) -> Result<DenseTensor<C64>> {
    let (vals, vecs) = eigh(h)?;
    let g = Mat::<C64>::from_fn(4, 4, |r, c| {
        (0..4)
            .map(|k| vecs[(r, k)] * C64::new(0.0, -vals[k] * x).exp() * vecs[(c, k)].conj())
            .sum()
    });
    DenseTensor::from_mat(g.as_ref()).reshape(vec![2, 2, 2, 2])
}

/// Precomputed gates for one Trotter step.
pub struct StepOperator {
    /// Per layer of the sequence: its bonds and one gate per bond.
    layers: Vec<(Layer, Vec<DenseTensor<C64>>)>,
    n: usize,
}

impl StepOperator {
    pub fn new(h: &SpinHamiltonian, dt: f64, order: u32) -> Result<Self> {
        let hb = bond_hamiltonians(h)?;
        let n = h.n_sites();
        let mut layers = Vec::new();
        for (layer, c) in layer_sequence(order) {
            let first = if layer == Layer::A { 0 } else { 1 };
            let gates = (first..n - 1)
                .step_by(2)
                .map(|i| gate(hb[i].as_ref(), c * dt))
                .collect::<Result<Vec<_>>>()?;
            layers.push((layer, gates));
        }
        Ok(Self { layers, n })
    }

    /// Applies one step, truncating after every gate.
    fn apply(&self, psi: &mut MpsState<C64>, chi: usize, cutoff: f64, log: &mut GateLog) -> Result<()> {
        for (li, (layer, gates)) in self.layers.iter().enumerate() {
            let first = if *layer == Layer::A { 0 } else { 1 };
            let bonds: Vec<usize> = (first..self.n - 1).step_by(2).collect();
            if li % 2 == 0 {
                for (g, &i) in gates.iter().zip(&bonds) {
                    apply_gate(psi, i, g, chi, cutoff, true, log)?;
                }
            } else {
                for (g, &i) in gates.iter().zip(&bonds).rev() {
                    apply_gate(psi, i, g, chi, cutoff, false, log)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct GateLog {
    max_renorm: f64,
    capped_weight: f64,
}

fn apply_gate(
    psi: &mut MpsState<C64>,
    i: usize,
    g: &DenseTensor<C64>,
    chi: usize,
    cutoff: f64,
    right: bool,
    log: &mut GateLog,
) -> Result<()> {
    psi.move_center(if right { i } else { i + 1 });
    let theta = contract(&psi.tensors[i], &psi.tensors[i + 1], &[(2, 0)])?; // [a, s, t, b]
    let dl = theta.shape()[0];
    let dr = theta.shape()[3];
    let theta = contract(g, &theta, &[(2, 1), (3, 2)])?.permute(&[2, 0, 1, 3])?;
    let m = theta.as_mat(2);
    let svd = svd_truncate(m, chi, cutoff)?;
    let k = svd.s.len();
    let snorm = svd.s.iter().map(|x| x * x).sum::<f64>().sqrt();
    log.max_renorm = log.max_renorm.max((1.0 - snorm).abs());
    if svd.report.chi_cap_hit {
        log.capped_weight = log.capped_weight.max(svd.report.discarded_weight);
    }
    psi.cumulative_truncation += svd.report.discarded_weight;
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
    psi.tensors[i] = u.reshape(vec![dl, 2, k])?;
    psi.tensors[i + 1] = vh.reshape(vec![k, 2, dr])?;
    psi.center = if right { i + 1 } else { i };
    Ok(())
}

/// Evolves `psi` under `e^{−iHt}` up to `cfg.t_max`, calling
/// `observer(step, t, ψ(t))` at step 0 and every `sample_stride` steps.
pub fn tebd_evolve(
    psi: &MpsState<C64>,
    h: &SpinHamiltonian,
    cfg: &EvolutionConfig,
    mut observer: impl FnMut(usize, f64, &MpsState<C64>) -> Result<()>,
) -> Result<(MpsState<C64>, Trajectory)> {
    cfg.validate()?;
    if psi.n_sites() != h.n_sites() {
        return Err(Error::Validation(format!(
            "state has {} sites, Hamiltonian {}",
            psi.n_sites(),
            h.n_sites()
        )));
    }
    let op = StepOperator::new(h, cfg.dt, cfg.trotter_order)?;
    let mut cur = psi.clone();
    let mut traj = Trajectory::default();
    let mut log = GateLog::default();
    observer(0, 0.0, &cur)?;
    traj.sample_times.push(0.0);
    let steps = cfg.n_steps();
    for step in 1..=steps {
        op.apply(&mut cur, cfg.chi_max, cfg.svd_cutoff, &mut log)?;
        traj.max_bond_dim = traj.max_bond_dim.max(cur.max_bond_dim());
        if step % cfg.sample_stride == 0 {
            let t = step as f64 * cfg.dt;
            observer(step, t, &cur)?;
            traj.sample_times.push(t);
        }
    }
    traj.steps = steps;
    traj.max_renormalization = log.max_renorm;
    traj.cumulative_truncation = cur.cumulative_truncation;
    if log.capped_weight > TRUNCATION_WARN {
        traj.warnings.push(format!(
            "bond dimension cap {} hit with discarded weight {:.3e} in one gate",
            cfg.chi_max, log.capped_weight
        ));
    }
    Ok((cur, traj))
}

/// Steps `psi` forward by `steps` Trotter steps with a prebuilt operator.
pub(crate) fn advance(
    op: &StepOperator,
    psi: &mut MpsState<C64>,
    steps: usize,
    chi: usize,
    cutoff: f64,
) -> Result<(f64, f64)> {
    let mut log = GateLog::default();
    for _ in 0..steps {
        op.apply(psi, chi, cutoff, &mut log)?;
    }
    Ok((log.max_renorm, log.capped_weight))
}
