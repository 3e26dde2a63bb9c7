//! Shared conventions for emitted CSV files.
//!
//! Every file starts with one `#` line naming the crate version and the
//! hash of the run configuration, followed by an RFC 4180 table. Floats use
//! Rust's shortest round-trip formatting, so rerunning a configuration
//! reproduces files byte for byte.

use std::io::Write;

use sha2::{Digest, Sha256};

use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance written at the top of every output file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>) -> Self {
        Self {
            config_hash: config_hash.into(),
        }
    }

    pub fn write_header(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "# lgprobe {VERSION} config_hash={}", self.config_hash)?;
        Ok(())
    }
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn fmt_opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
