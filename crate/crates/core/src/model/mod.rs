//! Spin-1/2 chain Hamiltonians with pairwise couplings and on-site fields,
//!
//! `H = Σ_{α,i<j} J_α^{ij} σ_i^α σ_j^α + Σ_{α,i} B_α^i σ_i^α`,
//!
//! and their dense, matrix-free and MPO forms.
//!
//! Basis convention: site 0 is the most significant bit of the basis index
//! and bit value 0 is spin up, so `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩` are indices 0..4.

mod family;
mod mpo;
mod pauli;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use family::{ModelFamily, ModelSpec};
pub use mpo::Mpo;
pub use pauli::{apply_site_pauli, PauliSum, PauliTerm};

use crate::error::{Error, Result};
use faer::Mat;

use crate::tensor::C64;

/// Largest chain handled by dense and matrix-free exact methods.
pub const MAX_DENSE_SITES: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    X,
    Y,
    Z,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::X, Direction::Y, Direction::Z];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::X => "x",
            Direction::Y => "y",
            Direction::Z => "z",
        }
    }

    /// Pauli matrix in the `(↑, ↓)` basis.
    pub fn pauli(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Direction::X => [[o, one], [one, o]],
            Direction::Y => [[o, -i], [i, o]],
            Direction::Z => [[one, o], [o, -one]],
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Direction::X),
            "y" => Ok(Direction::Y),
            "z" => Ok(Direction::Z),
            other => Err(Error::Validation(format!(
                "unknown direction '{other}', expected x, y or z"
            ))),
        }
    }
}

/// Which named family a Hamiltonian came from, and its sweep parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelTag {
    pub family: String,
    pub lambda_name: String,
    pub lambda: f64,
}

/// Coupling and field coefficients of a spin-1/2 Hamiltonian.
///
/// Coupling keys are stored with `i < j`. Absent entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinHamiltonian {
    n_sites: usize,
    couplings: BTreeMap<(Direction, usize, usize), f64>,
    fields: BTreeMap<(Direction, usize), f64>,
    tag: Option<ModelTag>,
}

/// Builds a Hamiltonian from explicit coefficients.
///
/// Coupling pairs may be given in either order; a repeated key keeps the
/// last value. Zero coefficients are dropped.
pub fn build_general(
    n: usize,
    couplings: impl IntoIterator<Item = ((Direction, usize, usize), f64)>,
    fields: impl IntoIterator<Item = ((Direction, usize), f64)>,
) -> Result<SpinHamiltonian> {
    if n == 0 {
        return Err(Error::Validation("n_sites must be positive".into()));
    }
    let mut h = SpinHamiltonian {
        n_sites: n,
        couplings: BTreeMap::new(),
        fields: BTreeMap::new(),
        tag: None,
    };
    for ((a, i, j), v) in couplings {
        if i >= n || j >= n {
            return Err(Error::Validation(format!(
                "coupling ({a}, {i}, {j}) has a site outside [0, {n})"
            )));
        }
        if i == j {
            return Err(Error::Validation(format!(
                "coupling ({a}, {i}, {j}) joins a site to itself"
            )));
        }
        if !v.is_finite() {
            return Err(Error::Validation(format!("coupling ({a}, {i}, {j}) is {v}")));
        }
        let key = (a, i.min(j), i.max(j));
        if v == 0.0 {
            h.couplings.remove(&key);
        } else {
            h.couplings.insert(key, v);
        }
    }
    for ((a, i), v) in fields {
        if i >= n {
            return Err(Error::Validation(format!(
                "field ({a}, {i}) has a site outside [0, {n})"
            )));
        }
        if !v.is_finite() {
            return Err(Error::Validation(format!("field ({a}, {i}) is {v}")));
        }
        if v == 0.0 {
            h.fields.remove(&(a, i));
        } else {
            h.fields.insert((a, i), v);
        }
    }
    Ok(h)
}

fn check_chain(n: usize, j: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::Validation(format!("chain needs n >= 2, got {n}")));
    }
    if !(j > 0.0 && j.is_finite()) {
        return Err(Error::Validation(format!("coupling j must be positive, got {j}")));
    }
    Ok(())
}

/// Open XXZ chain, `J Σ (σˣσˣ + σʸσʸ + Δ σᶻσᶻ)` on nearest neighbours.
pub fn build_xxz(n: usize, j: f64, delta: f64) -> Result<SpinHamiltonian> {
    check_chain(n, j)?;
    if !delta.is_finite() {
        return Err(Error::Validation(format!("delta is {delta}")));
    }
    let couplings = (0..n - 1).flat_map(|i| {
        [
            ((Direction::X, i, i + 1), j),
            ((Direction::Y, i, i + 1), j),
            ((Direction::Z, i, i + 1), j * delta),
        ]
    });
    let mut h = build_general(n, couplings, [])?;
    h.tag = Some(ModelTag {
        family: "xxz".into(),
        lambda_name: "delta".into(),
        lambda: delta,
    });
    Ok(h)
}

/// Open anisotropic XY chain in a transverse field,
/// `Σ [J(1+γ)/2 σˣσˣ + J(1−γ)/2 σʸσʸ] + B_z Σ σᶻ`.
///
/// The tag records `ν = bz / j`, whose critical value is 1.
pub fn build_xy(n: usize, j: f64, gamma: f64, bz: f64) -> Result<SpinHamiltonian> {
    check_chain(n, j)?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Validation(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    if !(bz >= 0.0 && bz.is_finite()) {
        return Err(Error::Validation(format!("bz must be nonnegative, got {bz}")));
    }
    let couplings = (0..n - 1).flat_map(|i| {
        [
            ((Direction::X, i, i + 1), j * (1.0 + gamma) / 2.0),
            ((Direction::Y, i, i + 1), j * (1.0 - gamma) / 2.0),
        ]
    });
    let fields = (0..n).map(|i| ((Direction::Z, i), bz));
    let mut h = build_general(n, couplings, fields)?;
    h.tag = Some(ModelTag {
        family: "xy".into(),
        lambda_name: "nu".into(),
        lambda: bz / j,
    });
    Ok(h)
}

/// The operator `f` with `σ_k^μ H σ_k^μ = H − f`:
/// twice every coupling and field at site `k` whose direction is not `μ`.
pub fn build_fk(h: &SpinHamiltonian, k: usize, mu: Direction) -> Result<SpinHamiltonian> {
    if k >= h.n_sites {
        return Err(Error::Validation(format!(
            "site {k} outside [0, {})",
            h.n_sites
        )));
    }
    let couplings = h
        .couplings
        .iter()
        .filter(|((a, i, j), _)| *a != mu && (*i == k || *j == k))
        .map(|(&key, &v)| (key, 2.0 * v));
    let fields = h
        .fields
        .iter()
        .filter(|((a, i), _)| *a != mu && *i == k)
        .map(|(&key, &v)| (key, 2.0 * v));
    build_general(h.n_sites, couplings, fields)
}

impl SpinHamiltonian {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn coupling(&self, a: Direction, i: usize, j: usize) -> f64 {
        self.couplings
            .get(&(a, i.min(j), i.max(j)))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn field(&self, a: Direction, i: usize) -> f64 {
        self.fields.get(&(a, i)).copied().unwrap_or(0.0)
    }

    pub fn couplings(&self) -> impl Iterator<Item = ((Direction, usize, usize), f64)> + '_ {
        self.couplings.iter().map(|(&k, &v)| (k, v))
    }

    pub fn fields(&self) -> impl Iterator<Item = ((Direction, usize), f64)> + '_ {
        self.fields.iter().map(|(&k, &v)| (k, v))
    }

    pub fn tag(&self) -> Option<&ModelTag> {
        self.tag.as_ref()
    }

    pub fn with_tag(mut self, tag: ModelTag) -> Self {
        self.tag = Some(tag);
        self
    }

    /// True when every matrix element in the computational basis is real,
    /// which holds unless some `B_y` is nonzero.
    pub fn is_real(&self) -> bool {
        !self.fields.keys().any(|(a, _)| *a == Direction::Y)
    }

    pub fn is_nearest_neighbor(&self) -> bool {
        self.couplings.keys().all(|(_, i, j)| j - i == 1)
    }

    /// Every coefficient multiplied by `s`.
    pub fn scaled(&self, s: f64) -> SpinHamiltonian {
        let mut out = self.clone();
        out.couplings.values_mut().for_each(|v| *v *= s);
        out.fields.values_mut().for_each(|v| *v *= s);
        out.tag = None;
        out
    }

    /// Sum of two Hamiltonians on the same chain.
    pub fn plus(&self, other: &SpinHamiltonian) -> Result<SpinHamiltonian> {
        if self.n_sites != other.n_sites {
            return Err(Error::Validation(format!(
                "cannot add Hamiltonians on {} and {} sites",
                self.n_sites, other.n_sites
            )));
        }
        let mut c = self.couplings.clone();
        for (k, v) in &other.couplings {
            *c.entry(*k).or_insert(0.0) += v;
        }
        let mut f = self.fields.clone();
        for (k, v) in &other.fields {
            *f.entry(*k).or_insert(0.0) += v;
        }
        build_general(self.n_sites, c, f)
    }

    /// Pauli-string expansion, one term per coefficient.
    pub fn pauli_sum(&self) -> PauliSum {
        PauliSum::from_hamiltonian(self)
    }

    /// Dense `2^n × 2^n` matrix.
    pub fn to_dense(&self) -> Result<Mat<C64>> {
        self.guard_dense()?;
        Ok(self.pauli_sum().to_dense())
    }

    /// Dense real matrix, `None` when some matrix element is complex.
    pub fn to_dense_real(&self) -> Result<Option<Mat<f64>>> {
        self.guard_dense()?;
        Ok(self.pauli_sum().to_dense_real())
    }

    fn guard_dense(&self) -> Result<()> {
        if self.n_sites > MAX_DENSE_SITES {
            return Err(Error::ResourceGuard(format!(
                "dense form needs n_sites <= {MAX_DENSE_SITES}, got {}",
                self.n_sites
            )));
        }
        Ok(())
    }

    /// Nearest-neighbour MPO.
    pub fn to_mpo<T: crate::tensor::Scalar>(&self) -> Result<Mpo<T>> {
        Mpo::from_hamiltonian(self)
    }
}
