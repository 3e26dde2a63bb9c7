//! Single-site two-time correlations from either engine.

use super::{CorrelationSeries, Engine, SeriesMeta};
use crate::ed::{ed_correlation, EdSystem};
use crate::error::{Error, Result};
use crate::model::{Direction, SpinHamiltonian, MAX_DENSE_SITES};
use crate::mps::{correlation_direct, correlation_folded, dmrg_ground, DmrgConfig, EvolutionConfig, MpsState};
use crate::tensor::C64;

/// A ground state prepared by one of the engines.
#[derive(Clone, Debug)]
pub enum GroundState {
    Ed(EdSystem),
    /// DMRG state of a real Hamiltonian.
    Mps {
        state: MpsState<f64>,
        e0: f64,
        chi: usize,
        converged: bool,
    },
    MpsComplex {
        state: MpsState<C64>,
        e0: f64,
        chi: usize,
        converged: bool,
    },
}

impl GroundState {
    /// ED for `n ≤ 14` unless `engine` says otherwise, DMRG beyond.
    pub fn compute(h: &SpinHamiltonian, engine: Option<Engine>, dmrg: &DmrgConfig) -> Result<Self> {
        let engine = engine.unwrap_or(if h.n_sites() <= MAX_DENSE_SITES {
            Engine::Ed
        } else {
            Engine::Mps
        });
        match engine {
            Engine::Ed => Ok(GroundState::Ed(EdSystem::new(h)?)),
            Engine::Mps if h.is_real() => {
                let r = dmrg_ground(&h.to_mpo::<f64>()?, dmrg)?;
                Ok(GroundState::Mps {
                    state: r.state,
                    e0: r.e0,
                    chi: dmrg.chi_max,
                    converged: r.converged,
                })
            }
            Engine::Mps => {
                let r = dmrg_ground(&h.to_mpo::<C64>()?, dmrg)?;
                Ok(GroundState::MpsComplex {
                    state: r.state,
                    e0: r.e0,
                    chi: dmrg.chi_max,
                    converged: r.converged,
                })
            }
        }
    }

    pub fn e0(&self) -> f64 {
        match self {
            GroundState::Ed(s) => s.ground().e0,
            GroundState::Mps { e0, .. } | GroundState::MpsComplex { e0, .. } => *e0,
        }
    }

    pub fn engine(&self) -> Engine {
        match self {
            GroundState::Ed(_) => Engine::Ed,
            _ => Engine::Mps,
        }
    }

    /// False only for a DMRG run that hit its sweep limit.
    pub fn converged(&self) -> bool {
        match self {
            GroundState::Ed(_) => true,
            GroundState::Mps { converged, .. } | GroundState::MpsComplex { converged, .. } => *converged,
        }
    }

    pub fn n_sites(&self) -> usize {
        match self {
            GroundState::Ed(s) => s.n_sites(),
            GroundState::Mps { state, .. } => state.n_sites(),
            GroundState::MpsComplex { state, .. } => state.n_sites(),
        }
    }
}

/// Dispatches to [`stc_ed`] or [`stc_mps`] according to `ground`.
pub fn stc(
    ground: &GroundState,
    h: &SpinHamiltonian,
    k: usize,
    mu: Direction,
    grid: &[f64],
    evo: &EvolutionConfig,
) -> Result<CorrelationSeries> {
    match ground {
        GroundState::Ed(sys) => stc_ed(sys, k, mu, grid),
        _ => stc_mps(ground, h, k, mu, grid, evo),
    }
}

pub fn stc_ed(sys: &EdSystem, k: usize, mu: Direction, grid: &[f64]) -> Result<CorrelationSeries> {
    check_grid_start(grid)?;
    ed_correlation(sys, k, mu, grid)
}

fn check_grid_start(grid: &[f64]) -> Result<()> {
    match grid.first() {
        Some(&t) if t == 0.0 => {}
        Some(&t) => return Err(Error::Validation(format!("time grid must start at 0, got {t}"))),
        None => return Err(Error::Validation("empty time grid".into())),
    }
    if let Some(w) = grid.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::Validation(format!(
            "time grid must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Step indices of `grid` on the lattice `n·dt`.
fn grid_steps(grid: &[f64], dt: f64) -> Result<Vec<usize>> {
    let mut steps = Vec::with_capacity(grid.len());
    let mut bad = None;
    for &t in grid {
        let n = (t / dt).round();
        if (t - n * dt).abs() > 1e-9 * dt.max(t.abs()) {
            bad.get_or_insert(t);
        }
        steps.push(n as usize);
    }
    if let Some(t) = bad {
        let valid: Vec<String> = steps.iter().map(|&n| format!("{}", n as f64 * dt)).collect();
        let shown = if valid.len() > 12 {
            format!("{}, ..., {} ({} points)", valid[..6].join(", "), valid[valid.len() - 1], valid.len())
        } else {
            valid.join(", ")
        };
        return Err(Error::Validation(format!(
            "grid point {t} is not a multiple of dt = {dt}; nearest valid grid: {shown}"
        )));
    }
    Ok(steps)
}

/// MPS correlation series on `grid`, whose points must be multiples of
/// `evo.dt`. The evolution runs to the last grid point.
pub fn stc_mps(
    ground: &GroundState,
    h: &SpinHamiltonian,
    k: usize,
    mu: Direction,
    grid: &[f64],
    evo: &EvolutionConfig,
) -> Result<CorrelationSeries> {
    check_grid_start(grid)?;
    if k >= h.n_sites() {
        return Err(Error::Validation(format!("site {k} outside [0, {})", h.n_sites())));
    }
    if ground.n_sites() != h.n_sites() {
        return Err(Error::Validation("ground state and Hamiltonian sizes differ".into()));
    }
    let steps = grid_steps(grid, evo.dt)?;
    let cfg = EvolutionConfig {
        t_max: *steps.last().expect("nonempty") as f64 * evo.dt,
        ..evo.clone()
    };
    let run = match ground {
        GroundState::Mps { state, e0, .. } if h.is_real() => correlation_folded(state, *e0, h, k, mu, &cfg)?,
        GroundState::Mps { state, e0, .. } => correlation_direct(state, *e0, h, k, mu, &cfg)?,
        GroundState::MpsComplex { state, e0, .. } => correlation_direct(state, *e0, h, k, mu, &cfg)?,
        GroundState::Ed(_) => return Err(Error::Validation("stc_mps needs an MPS ground state".into())),
    };
    for w in &run.warnings {
        log::warn!("{w}");
    }
    let values = steps.iter().map(|&n| run.values[n]).collect();
    let meta = SeriesMeta::for_hamiltonian(h, k, mu, Engine::Mps, Some(evo.chi_max), Some(evo.dt));
    CorrelationSeries::new(grid.to_vec(), values, meta, 0.0)
}
