//! Matrix-free Pauli-string sums on the `2^n` computational basis.

use faer::Mat;

use super::{Direction, SpinHamiltonian};
use crate::tensor::C64;

/// `coeff · ⊗ σ` acting on basis state `b` as
/// `i^{n_y} · (−1)^{popcount(b & phase_mask)} · |b ⊕ flip_mask⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliTerm {
    pub coeff: f64,
    /// Bits flipped by σˣ and σʸ.
    pub flip_mask: u64,
    /// Bits picking up a sign from σʸ and σᶻ.
    pub phase_mask: u64,
    pub n_y: u32,
}

impl PauliTerm {
    pub fn new(n: usize, coeff: f64, ops: &[(usize, Direction)]) -> Self {
        let mut t = PauliTerm {
            coeff,
            flip_mask: 0,
            phase_mask: 0,
            n_y: 0,
        };
        for &(site, d) in ops {
            let bit = 1u64 << (n - 1 - site);
            match d {
                Direction::X => t.flip_mask ^= bit,
                Direction::Y => {
                    t.flip_mask ^= bit;
                    t.phase_mask ^= bit;
                    t.n_y += 1;
                }
                Direction::Z => t.phase_mask ^= bit,
            }
        }
        t
    }

    /// `i^{n_y}` as a complex unit.
    fn y_phase(&self) -> C64 {
        match self.n_y % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }

    /// Target index and matrix element for input basis state `b`.
    #[inline]
    pub fn act(&self, b: u64) -> (u64, C64) {
        let sign = if (b & self.phase_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        (b ^ self.flip_mask, self.y_phase() * (self.coeff * sign))
    }
}

/// A Hermitian sum of Pauli strings on `n` sites.
#[derive(Clone, Debug)]
pub struct PauliSum {
    n: usize,
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn from_hamiltonian(h: &SpinHamiltonian) -> Self {
        let n = h.n_sites();
        let mut terms = Vec::new();
        for ((a, i, j), v) in h.couplings() {
            terms.push(PauliTerm::new(n, v, &[(i, a), (j, a)]));
        }
        for ((a, i), v) in h.fields() {
            terms.push(PauliTerm::new(n, v, &[(i, a)]));
        }
        Self { n, terms }
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// All matrix elements real (even number of σʸ in every term).
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.n_y % 2 == 0)
    }

    /// `y = H·x`
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for t in &self.terms {
            for (b, &xb) in x.iter().enumerate() {
                let (b2, m) = t.act(b as u64);
                y[b2 as usize] += m * xb;
            }
        }
    }

    /// Real matvec; panics if some term is complex.
    pub fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        assert!(self.is_real(), "apply_real on a complex operator");
        y.iter_mut().for_each(|v| *v = 0.0);
        for t in &self.terms {
            for (b, &xb) in x.iter().enumerate() {
                let (b2, m) = t.act(b as u64);
                y[b2 as usize] += m.re * xb;
            }
        }
    }

    /// `⟨x|H|x⟩` for normalized `x`.
    pub fn expectation(&self, x: &[C64]) -> f64 {
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        self.apply(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let d = self.dim();
        let mut m = Mat::<C64>::zeros(d, d);
        for t in &self.terms {
            for b in 0..d as u64 {
                let (b2, v) = t.act(b);
                m[(b2 as usize, b as usize)] += v;
            }
        }
        m
    }

    pub fn to_dense_real(&self) -> Option<Mat<f64>> {
        if !self.is_real() {
            return None;
        }
        let d = self.dim();
        let mut m = Mat::<f64>::zeros(d, d);
        for t in &self.terms {
            for b in 0..d as u64 {
                let (b2, v) = t.act(b);
                m[(b2 as usize, b as usize)] += v.re;
            }
        }
        Some(m)
    }
}

/// Returns `σ_k^μ · x` for a state on `n` sites.
pub fn apply_site_pauli(x: &[C64], n: usize, k: usize, mu: Direction) -> Vec<C64> {
    let t = PauliTerm::new(n, 1.0, &[(k, mu)]);
    let mut y = vec![C64::new(0.0, 0.0); x.len()];
    for (b, &xb) in x.iter().enumerate() {
        let (b2, m) = t.act(b as u64);
        y[b2 as usize] = m * xb;
    }
    y
}
