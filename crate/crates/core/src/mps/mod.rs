//! Matrix product state engine: DMRG ground states, TEBD evolution and
//! correlators built on them.

pub mod checkpoint;
mod correlate;
mod dmrg;
mod env;
mod state;
mod tebd;

pub use checkpoint::{content_hash, StoredMps};
pub use correlate::{correlation_direct, correlation_folded, CorrelatorRun};
pub use dmrg::{dmrg_ground, DmrgConfig, DmrgResult, SweepRecord};
pub use state::{bilinear, overlap, MpsState};
pub use tebd::{tebd_evolve, EvolutionConfig, StepOperator, Trajectory, TRUNCATION_WARN};
