//! Nearest-neighbour Hamiltonians as matrix product operators.
//!
//! Site tensors have shape `(D_left, 2, 2, D_right)`, indexed
//! `W[a, s_out, s_in, b]`. The boundary vectors are folded in, so the
//! first tensor has `D_left = 1` and the last has `D_right = 1`.
//!
//! Bulk tensors are upper triangular in the channel index: channel 0 means
//! "nothing placed yet", the last channel means "term complete", and one
//! channel per coupled direction carries the right half of a bond term.
//! σʸσʸ is written as −τ⊗τ with the real matrix τ = iσʸ, so a Hamiltonian
//! without `B_y` fields yields a real MPO.

use super::{Direction, SpinHamiltonian};
use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Scalar, C64};

#[derive(Clone, Debug)]
pub struct Mpo<T> {
    sites: Vec<DenseTensor<T>>,
}

fn op2(d: Direction) -> [[f64; 2]; 2] {
    match d {
        Direction::X => [[0.0, 1.0], [1.0, 0.0]],
        Direction::Y => [[0.0, 1.0], [-1.0, 0.0]],
        Direction::Z => [[1.0, 0.0], [0.0, -1.0]],
    }
}

fn cvt<T: Scalar>(z: C64) -> Result<T> {
    T::from_c64(z).ok_or_else(|| {
        Error::Unsupported("complex matrix element (B_y field) in a real MPO".into())
    })
}

impl<T: Scalar> Mpo<T> {
    pub fn from_hamiltonian(h: &SpinHamiltonian) -> Result<Self> {
        if !h.is_nearest_neighbor() {
            let (a, i, j) = h
                .couplings()
                .map(|(k, _)| k)
                .find(|(_, i, j)| j - i != 1)
                .expect("non-nearest-neighbour coupling");
            return Err(Error::Unsupported(format!(
                "MPO supports nearest-neighbour couplings only; found ({a}, {i}, {j})"
            )));
        }
        let n = h.n_sites();
        let dirs: Vec<Direction> = Direction::ALL
            .into_iter()
            .filter(|&a| h.couplings().any(|((b, _, _), _)| b == a))
            .collect();
        let d = dirs.len() + 2;
        let last = d - 1;
        let mut sites = Vec::with_capacity(n);
        for i in 0..n {
            let mut w = DenseTensor::<T>::zeros(vec![d, 2, 2, d]);
            for s in 0..2 {
                w.set(&[0, s, s, 0], T::one());
                w.set(&[last, s, s, last], T::one());
            }
            for (c, &a) in dirs.iter().enumerate() {
                let jv = if i + 1 < n { h.coupling(a, i, i + 1) } else { 0.0 };
                // σʸσʸ = −τ⊗τ
                let left = if a == Direction::Y { -jv } else { jv };
                let o = op2(a);
                for s in 0..2 {
                    for t in 0..2 {
                        w.set(&[0, s, t, c + 1], T::from_real(left * o[s][t]));
                        w.set(&[c + 1, s, t, last], T::from_real(o[s][t]));
                    }
                }
            }
            let mut onsite = [[C64::new(0.0, 0.0); 2]; 2];
            for a in Direction::ALL {
                let b = h.field(a, i);
                let p = a.pauli();
                for s in 0..2 {
                    for t in 0..2 {
                        onsite[s][t] += p[s][t] * b;
                    }
                }
            }
            for s in 0..2 {
                for t in 0..2 {
                    w.set(&[0, s, t, last], cvt(onsite[s][t])?);
                }
            }
            sites.push(w);
        }
        let mut mpo = Mpo { sites };
        mpo.fold_boundaries(0, last);
        Ok(mpo)
    }

    fn fold_boundaries(&mut self, first: usize, last: usize) {
        let n = self.sites.len();
        let w0 = &self.sites[0];
        let row = DenseTensor::from_fn(vec![1, 2, 2, w0.shape()[3]], |ix| w0.get(&[first, ix[1], ix[2], ix[3]]));
        self.sites[0] = row;
        let wl = &self.sites[n - 1];
        let col = DenseTensor::from_fn(vec![wl.shape()[0], 2, 2, 1], |ix| wl.get(&[ix[0], ix[1], ix[2], last]));
        self.sites[n - 1] = col;
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn site(&self, i: usize) -> &DenseTensor<T> {
        &self.sites[i]
    }

    /// Bond dimensions between consecutive sites.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1]
            .iter()
            .map(|w| w.shape()[3])
            .collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Adds `b · Σ_i σ_i^a` to the on-site terms.
    pub fn with_uniform_field(&self, a: Direction, b: f64) -> Result<Self> {
        let p = a.pauli();
        let mut out = self.clone();
        for w in out.sites.iter_mut() {
            // The on-site slot is (first row, last column) of each tensor.
            let col = w.shape()[3] - 1;
            for s in 0..2 {
                for t in 0..2 {
                    let v = w.get(&[0, s, t, col]) + cvt::<T>(p[s][t] * b)?;
                    w.set(&[0, s, t, col], v);
                }
            }
        }
        Ok(out)
    }

    pub fn to_complex(&self) -> Mpo<C64> {
        Mpo {
            sites: self.sites.iter().map(|w| w.map(|x| x.to_c64())).collect(),
        }
    }

    /// `⟨φ|H|φ⟩` for the product state `⊗_i (φ_i↑, φ_i↓)`.
    pub fn expectation_product(&self, states: &[[C64; 2]]) -> Result<C64> {
        if states.len() != self.sites.len() {
            return Err(Error::Shape(format!(
                "product state has {} sites, MPO has {}",
                states.len(),
                self.sites.len()
            )));
        }
        let mut env = vec![C64::new(1.0, 0.0)];
        for (w, phi) in self.sites.iter().zip(states) {
            let (dl, dr) = (w.shape()[0], w.shape()[3]);
            let mut next = vec![C64::new(0.0, 0.0); dr];
            for a in 0..dl {
                for s in 0..2 {
                    for t in 0..2 {
                        let m = phi[s].conj() * phi[t] * env[a];
                        for b in 0..dr {
                            next[b] += m * w.get(&[a, s, t, b]).to_c64();
                        }
                    }
                }
            }
            env = next;
        }
        Ok(env[0])
    }

    /// Dense matrix of the operator, for small chains.
    pub fn to_dense(&self) -> Result<faer::Mat<C64>> {
        let n = self.sites.len();
        if n > 12 {
            return Err(Error::ResourceGuard(format!("dense MPO contraction on {n} sites")));
        }
        // acc[(row, col, bond)] with row/col over the sites absorbed so far.
        let mut dim = 1usize;
        let mut acc = vec![C64::new(1.0, 0.0)];
        let mut bond = 1usize;
        for w in &self.sites {
            let dr = w.shape()[3];
            let nd = dim * 2;
            let mut next = vec![C64::new(0.0, 0.0); nd * nd * dr];
            for r in 0..dim {
                for c in 0..dim {
                    for a in 0..bond {
                        let v = acc[(r * dim + c) * bond + a];
                        if v == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for s in 0..2 {
                            for t in 0..2 {
                                for b in 0..dr {
                                    let x = w.get(&[a, s, t, b]).to_c64();
                                    next[((2 * r + s) * nd + 2 * c + t) * dr + b] += v * x;
                                }
                            }
                        }
                    }
                }
            }
            acc = next;
            dim = nd;
            bond = dr;
        }
        Ok(faer::Mat::from_fn(dim, dim, |r, c| acc[r * dim + c]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_general, build_xxz, build_xy};

    fn up() -> [C64; 2] {
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
    }

    #[test]
    fn bond_dims_small() {
        let m: Mpo<f64> = build_xxz(6, 1.0, 0.5).unwrap().to_mpo().unwrap();
        assert_eq!(m.max_bond_dim(), 5);
        let m: Mpo<f64> = build_xy(6, 1.0, 1.0, 0.3).unwrap().to_mpo().unwrap();
        assert_eq!(m.max_bond_dim(), 3);
    }

    #[test]
    fn xxz_all_up() {
        let m: Mpo<f64> = build_xxz(4, 1.0, 0.7).unwrap().to_mpo().unwrap();
        let e = m.expectation_product(&[up(); 4]).unwrap();
        assert!((e.re - 0.7 * 3.0).abs() < 1e-14);
    }

    #[test]
    fn ising_all_up_is_field_only() {
        // σˣσˣ has no diagonal part, so only the field survives.
        let m: Mpo<f64> = build_xy(4, 1.0, 1.0, 0.3).unwrap().to_mpo().unwrap();
        let e = m.expectation_product(&[up(); 4]).unwrap();
        assert!((e.re - 4.0 * 0.3).abs() < 1e-14);
    }

    #[test]
    fn long_range_is_rejected() {
        let h = build_general(4, [((Direction::Z, 0, 2), 1.0)], []).unwrap();
        assert!(matches!(h.to_mpo::<f64>(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn by_field_needs_complex() {
        let h = build_general(3, [((Direction::Z, 0, 1), 1.0)], [((Direction::Y, 1), 0.5)]).unwrap();
        assert!(h.to_mpo::<f64>().is_err());
        let m: Mpo<C64> = h.to_mpo().unwrap();
        let d = m.to_dense().unwrap();
        let want = h.to_dense().unwrap();
        let diff = (&d - &want).norm_max();
        assert!(diff < 1e-14);
    }

    #[test]
    fn single_site() {
        let h = build_general(1, [], [((Direction::X, 0), 2.0)]).unwrap();
        let m: Mpo<f64> = h.to_mpo().unwrap();
        let d = m.to_dense().unwrap();
        assert_eq!(d[(0, 1)], C64::new(2.0, 0.0));
    }
}
