//! Dense kernels shared by the ED and MPS engines.

mod dense;
mod krylov;
mod lanczos;
mod scalar;
mod svd;

pub use dense::{contract, matmul_rm, DenseTensor};
pub use krylov::{expm_krylov, ExpmOptions};
pub use lanczos::{lanczos_lowest, lanczos_lowest_with, LanczosOptions, LanczosResult};
pub use scalar::{axpy, inner, norm, scale_in_place, Scalar, C64};
pub use svd::{adjoint, eigh, lq_thin, qr_thin, svd_truncate, truncation_rank, TruncatedSvd, TruncationReport};
