//! On-disk formats: CSV tables, silo manifests, the binary model
//! container, and the report artifacts the CLI emits.

pub mod manifest;
pub mod model_file;
pub mod reports;
pub mod tables;

pub use manifest::{load_silo, write_silo};
pub use model_file::{load_model, save_model};

use crate::error::Error;
use crate::Result;
use sha2::{Digest, Sha256};
use std::path::Path;

/// Hex sha-256 of a file, for run manifests.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes =
        std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    Ok(out)
}
