//! Open-boundary matrix product states in mixed canonical form.

use faer::MatRef;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::env;
use crate::error::{Error, Result};
use crate::model::{Direction, Mpo};
use crate::tensor::{contract, lq_thin, matmul_rm, qr_thin, svd_truncate, DenseTensor, Scalar, C64};

/// Site tensors of shape `(D_left, 2, D_right)` with `D_left = 1` on the
/// first site and `D_right = 1` on the last.
///
/// Tensors left of `center` are left isometries, tensors right of it are
/// right isometries, and the norm lives in the center tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsState<T> {
    pub(crate) tensors: Vec<DenseTensor<T>>,
    pub(crate) center: usize,
    /// Sum of discarded weights over every truncation applied so far.
    pub cumulative_truncation: f64,
}

impl<T: Scalar> MpsState<T> {
    /// Wraps raw tensors and brings them to canonical form at site 0.
    pub fn from_tensors(tensors: Vec<DenseTensor<T>>) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::Validation("MPS needs at least one site".into()));
        }
        for (i, t) in tensors.iter().enumerate() {
            if t.rank() != 3 || t.shape()[1] != 2 {
                return Err(Error::Shape(format!("site {i} has shape {:?}", t.shape())));
            }
            if i + 1 < tensors.len() && t.shape()[2] != tensors[i + 1].shape()[0] {
                return Err(Error::Shape(format!("bond {i} dimensions disagree")));
            }
        }
        if tensors[0].shape()[0] != 1 || tensors[tensors.len() - 1].shape()[2] != 1 {
            return Err(Error::Shape("boundary bonds must have dimension 1".into()));
        }
        let n = tensors.len();
        let mut s = Self {
            tensors,
            center: n - 1,
            cumulative_truncation: 0.0,
        };
        s.move_center(0);
        s.normalize()?;
        Ok(s)
    }

    /// `⊗_i (a_i |↑⟩ + b_i |↓⟩)`, normalized.
    pub fn product(states: &[[T; 2]]) -> Result<Self> {
        let tensors = states
            .iter()
            .map(|s| DenseTensor::new(vec![1, 2, 1], s.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_tensors(tensors)
    }

    pub fn all_up(n: usize) -> Result<Self> {
        Self::product(&vec![[T::one(), T::zero()]; n])
    }

    /// Random real entries in [−1, 1] with bond dimensions capped at `chi`.
    pub fn random(n: usize, chi: usize, seed: u64) -> Result<Self> {
        if n == 0 || chi == 0 {
            return Err(Error::Validation("random MPS needs n >= 1 and chi >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bond = |b: usize| -> usize {
            // bond b sits between sites b-1 and b
            let left = 1usize.checked_shl(b as u32).unwrap_or(usize::MAX);
            let right = 1usize.checked_shl((n - b) as u32).unwrap_or(usize::MAX);
            chi.min(left).min(right)
        };
        let tensors = (0..n)
            .map(|i| {
                let (dl, dr) = (bond(i), bond(i + 1));
                DenseTensor::from_fn(vec![dl, 2, dr], |_| T::from_real(rng.gen::<f64>() * 2.0 - 1.0))
            })
            .collect();
        Self::from_tensors(tensors)
    }

    /// Successive SVDs of a dense state vector (site 0 most significant).
    pub fn from_dense(psi: &[T], n: usize, chi_max: usize, cutoff: f64) -> Result<Self> {
        if psi.len() != 1usize << n {
            return Err(Error::Shape(format!("vector of length {} is not 2^{n}", psi.len())));
        }
        let mut tensors = Vec::with_capacity(n);
        let mut rest = psi.to_vec();
        let mut dl = 1;
        let mut discarded = 0.0;
        for i in 0..n - 1 {
            let cols = rest.len() / (dl * 2);
            let m = MatRef::from_row_major_slice(&rest, dl * 2, cols);
            let svd = svd_truncate(m, chi_max, cutoff)?;
            discarded += svd.report.discarded_weight;
            let k = svd.s.len();
            tensors.push(DenseTensor::from_mat(svd.u.as_ref()).reshape(vec![dl, 2, k])?);
            let mut sv = DenseTensor::from_mat(svd.vh.as_ref());
            for r in 0..k {
                for c in 0..cols {
                    let v = sv.get(&[r, c]).scale(svd.s[r]);
                    sv.set(&[r, c], v);
                }
            }
            rest = sv.into_data();
            dl = k;
            let _ = i;
        }
        tensors.push(DenseTensor::new(vec![dl, 2, 1], rest)?);
        let mut s = Self {
            tensors,
            center: n - 1,
            cumulative_truncation: discarded,
        };
        s.normalize()?;
        Ok(s)
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn tensor(&self, i: usize) -> &DenseTensor<T> {
        &self.tensors[i]
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.n_sites() - 1]
            .iter()
            .map(|t| t.shape()[2])
            .collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Norm of the center tensor, which is the state norm in canonical form.
    pub fn norm(&self) -> f64 {
        self.tensors[self.center].norm()
    }

    /// Rescales to unit norm and returns the previous norm.
    pub fn normalize(&mut self) -> Result<f64> {
        let nrm = self.norm();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::NumericalFailure {
                detail: format!("cannot normalize MPS with norm {nrm}"),
            });
        }
        let c = self.center;
        self.tensors[c].scale(T::from_real(1.0 / nrm));
        Ok(nrm)
    }

    /// Moves the orthogonality center by QR (rightwards) or LQ (leftwards).
    pub fn move_center(&mut self, to: usize) {
        assert!(to < self.n_sites());
        while self.center < to {
            let i = self.center;
            let a = &self.tensors[i];
            let (dl, dr) = (a.shape()[0], a.shape()[2]);
            let (q, r) = qr_thin(a.as_mat(2));
            let k = q.ncols();
            self.tensors[i] = DenseTensor::from_mat(q.as_ref()).reshape(vec![dl, 2, k]).unwrap();
            let next = &self.tensors[i + 1];
            let nd = next.shape()[2];
            let data = matmul_rm(r.as_ref(), next.as_mat(1));
            debug_assert_eq!(r.ncols(), dr);
            self.tensors[i + 1] = DenseTensor::new(vec![k, 2, nd], data).unwrap();
            self.center += 1;
        }
        while self.center > to {
            let i = self.center;
            let a = &self.tensors[i];
            let (dl, dr) = (a.shape()[0], a.shape()[2]);
            let (l, q) = lq_thin(a.as_mat(1));
            let k = q.nrows();
            self.tensors[i] = DenseTensor::from_mat(q.as_ref()).reshape(vec![k, 2, dr]).unwrap();
            let prev = &self.tensors[i - 1];
            let pl = prev.shape()[0];
            let data = matmul_rm(prev.as_mat(2), l.as_ref());
            debug_assert_eq!(l.nrows(), dl);
            self.tensors[i - 1] = DenseTensor::new(vec![pl, 2, k], data).unwrap();
            self.center -= 1;
        }
    }

    /// Largest deviation from the isometry conditions implied by `center`.
    pub fn isometry_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.tensors.iter().enumerate() {
            if i == self.center {
                continue;
            }
            let gram = if i < self.center {
                contract(&a.conj(), a, &[(0, 0), (1, 1)]).unwrap()
            } else {
                contract(&a.conj(), a, &[(1, 1), (2, 2)]).unwrap()
            };
            let d = gram.shape()[0];
            for r in 0..d {
                for c in 0..d {
                    let want = if r == c { T::one() } else { T::zero() };
                    worst = worst.max((gram.get(&[r, c]) - want).abs());
                }
            }
        }
        worst
    }

    /// Dense vector with site 0 as the most significant index.
    pub fn to_dense(&self) -> Result<Vec<T>> {
        if self.n_sites() > 24 {
            return Err(Error::ResourceGuard(format!(
                "dense vector of {} sites",
                self.n_sites()
            )));
        }
        let mut acc = self.tensors[0].clone().reshape(vec![2, self.tensors[0].shape()[2]])?;
        for t in &self.tensors[1..] {
            let next = contract(&acc, t, &[(1, 0)])?;
            let rows = next.shape()[0] * 2;
            let cols = next.shape()[2];
            acc = next.reshape(vec![rows, cols])?;
        }
        Ok(acc.into_data())
    }

    /// `Σ_t m[s][t] A_k[a, t, b]`
    pub fn apply_site_matrix(&mut self, k: usize, m: [[T; 2]; 2]) -> Result<()> {
        if k >= self.n_sites() {
            return Err(Error::Validation(format!("site {k} outside [0, {})", self.n_sites())));
        }
        let a = &self.tensors[k];
        let (dl, dr) = (a.shape()[0], a.shape()[2]);
        let out = DenseTensor::from_fn(vec![dl, 2, dr], |ix| {
            m[ix[1]][0] * a.get(&[ix[0], 0, ix[2]]) + m[ix[1]][1] * a.get(&[ix[0], 1, ix[2]])
        });
        self.tensors[k] = out;
        Ok(())
    }

    /// `σ_k^μ |ψ⟩`. Norm, bond dimensions and canonical form are unchanged
    /// because the Pauli matrix is unitary. On real states `μ = y` is
    /// rejected since the result is not real.
    pub fn apply_site_op(&self, k: usize, mu: Direction) -> Result<Self> {
        let p = mu.pauli();
        let cv = |z: C64| {
            T::from_c64(z).ok_or_else(|| {
                Error::Unsupported("σʸ on a real MPS; convert with to_complex first".into())
            })
        };
        let m = [[cv(p[0][0])?, cv(p[0][1])?], [cv(p[1][0])?, cv(p[1][1])?]];
        let mut out = self.clone();
        out.apply_site_matrix(k, m)?;
        Ok(out)
    }

    pub fn to_complex(&self) -> MpsState<C64> {
        MpsState {
            tensors: self.tensors.iter().map(|t| t.map(|x| x.to_c64())).collect(),
            center: self.center,
            cumulative_truncation: self.cumulative_truncation,
        }
    }

    /// `⟨ψ|W|ψ⟩` for an MPO on the same chain.
    pub fn expectation(&self, mpo: &Mpo<T>) -> Result<T> {
        if mpo.n_sites() != self.n_sites() {
            return Err(Error::Validation(format!(
                "MPO has {} sites, state has {}",
                mpo.n_sites(),
                self.n_sites()
            )));
        }
        let mut l = env::left_boundary::<T>();
        for i in 0..self.n_sites() {
            l = env::extend_left(&l, &self.tensors[i], mpo.site(i))?;
        }
        Ok(l.data()[0])
    }
}

/// `⟨a|b⟩`, conjugating `a`.
pub fn overlap<T: Scalar>(a: &MpsState<T>, b: &MpsState<T>) -> Result<T> {
    transfer(a, b, true)
}

/// `Σ a(s)·b(s)` without conjugation.
pub fn bilinear<T: Scalar>(a: &MpsState<T>, b: &MpsState<T>) -> Result<T> {
    transfer(a, b, false)
}

fn transfer<T: Scalar>(a: &MpsState<T>, b: &MpsState<T>, conj: bool) -> Result<T> {
    if a.n_sites() != b.n_sites() {
        return Err(Error::Validation(format!(
            "overlap of MPS with {} and {} sites",
            a.n_sites(),
            b.n_sites()
        )));
    }
    let mut e = DenseTensor::new(vec![1, 1], vec![T::one()])?;
    for (x, y) in a.tensors.iter().zip(&b.tensors) {
        let t1 = contract(&e, y, &[(1, 0)])?;
        let xa = if conj { x.conj() } else { x.clone() };
        e = contract(&xa, &t1, &[(0, 0), (1, 1)])?;
    }
    Ok(e.data()[0])
}
