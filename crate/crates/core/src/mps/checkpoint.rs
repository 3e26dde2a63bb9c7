//! Binary checkpoints of MPS site tensors.
//!
//! Layout, all integers little-endian `u64` unless noted:
//! magic `LGPMPS\0\0`, format version (`u32`), scalar kind (`u8`, 0 real,
//! 1 complex), site count, center, cumulative truncation (`f64`), then per
//! site its three dimensions followed by the entries in row-major order
//! (complex entries as re, im pairs).

use std::io::{Read, Write};

use super::state::MpsState;
use crate::error::{Error, Result};
use crate::output::sha256_hex;
use crate::tensor::{DenseTensor, Scalar, C64};

const MAGIC: &[u8; 8] = b"LGPMPS\0\0";
pub const FORMAT_VERSION: u32 = 1;

/// A checkpoint of either scalar kind.
#[derive(Clone, Debug, PartialEq)]
pub enum StoredMps {
    Real(MpsState<f64>),
    Complex(MpsState<C64>),
}

pub fn encode<T: Scalar>(psi: &MpsState<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(u8::from(T::IS_COMPLEX));
    let u = |out: &mut Vec<u8>, x: usize| out.extend_from_slice(&(x as u64).to_le_bytes());
    u(&mut out, psi.n_sites());
    u(&mut out, psi.center());
    out.extend_from_slice(&psi.cumulative_truncation.to_le_bytes());
    for t in &psi.tensors {
        for &d in t.shape() {
            u(&mut out, d);
        }
        for &x in t.data() {
            out.extend_from_slice(&x.re().to_le_bytes());
            if T::IS_COMPLEX {
                out.extend_from_slice(&x.im().to_le_bytes());
            }
        }
    }
    out
}

/// Hex SHA-256 of the encoded state.
pub fn content_hash<T: Scalar>(psi: &MpsState<T>) -> String {
    sha256_hex(&encode(psi))
}

pub fn save<T: Scalar>(psi: &MpsState<T>, w: &mut impl Write) -> Result<()> {
    w.write_all(&encode(psi))?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| Error::Format(format!("value {v} too large")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn read_tensors<T: Scalar>(c: &mut Cursor<'_>, n: usize, read: impl Fn(&mut Cursor<'_>) -> Result<T>) -> Result<Vec<DenseTensor<T>>> {
    let mut tensors = Vec::with_capacity(n.min(4096));
    for i in 0..n {
        let shape = vec![c.u64()?, c.u64()?, c.u64()?];
        let len = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .filter(|&l| l <= c.buf.len())
            .ok_or_else(|| Error::Format(format!("site {i} has implausible shape {shape:?}")))?;
        let data = (0..len).map(|_| read(c)).collect::<Result<Vec<_>>>()?;
        tensors.push(DenseTensor::new(shape, data)?);
    }
    Ok(tensors)
}

pub fn decode(buf: &[u8]) -> Result<StoredMps> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err(Error::Format("not an MPS checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(c.take(4)?.try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "format version {version}, this build reads {FORMAT_VERSION}"
        )));
    }
    let kind = c.take(1)?[0];
    let n = c.u64()?;
    let center = c.u64()?;
    let trunc = c.f64()?;
    if n == 0 || center >= n {
        return Err(Error::Format(format!("bad header: {n} sites, center {center}")));
    }
    let out = match kind {
        0 => {
            let t = read_tensors(&mut c, n, |c| c.f64())?;
            StoredMps::Real(assemble(t, center, trunc)?)
        }
        1 => {
            let t = read_tensors(&mut c, n, |c| Ok(C64::new(c.f64()?, c.f64()?)))?;
            StoredMps::Complex(assemble(t, center, trunc)?)
        }
        k => return Err(Error::Format(format!("unknown scalar kind {k}"))),
    };
    if c.pos != buf.len() {
        return Err(Error::Format(format!("{} trailing bytes", buf.len() - c.pos)));
    }
    Ok(out)
}

fn assemble<T: Scalar>(tensors: Vec<DenseTensor<T>>, center: usize, trunc: f64) -> Result<MpsState<T>> {
    for (i, t) in tensors.iter().enumerate() {
        if t.shape()[1] != 2 {
            return Err(Error::Format(format!("site {i} has physical dimension {}", t.shape()[1])));
        }
        if i + 1 < tensors.len() && t.shape()[2] != tensors[i + 1].shape()[0] {
            return Err(Error::Format(format!("bond {i} dimensions disagree")));
        }
    }
    if tensors[0].shape()[0] != 1 || tensors[tensors.len() - 1].shape()[2] != 1 {
        return Err(Error::Format("boundary bonds must have dimension 1".into()));
    }
    Ok(MpsState {
        tensors,
        center,
        cumulative_truncation: trunc,
    })
}

pub fn load(r: &mut impl Read) -> Result<StoredMps> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode(&buf)
}
