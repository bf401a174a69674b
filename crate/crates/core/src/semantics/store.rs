//! On-disk vector store.
//!
//! `vectors.bin` layout (all integers little-endian):
//!
//! | offset | size        | content                         |
//! |--------|-------------|---------------------------------|
//! | 0      | 8           | magic `ATLASVEC`                |
//! | 8      | 4           | format version (`1`)            |
//! | 12     | 4           | dimension `d`                   |
//! | 16     | 8           | row count `n`                   |
//! | 24     | `4·d·n`     | rows of `f32`, row-major        |
//!
//! The sidecar `<name>.keys.json` holds `{"version", "dim", "model", "keys"}`
//! with `keys[i]` naming row `i`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EmbeddingSet, SemanticsError};
use crate::notation::EntityKey;

pub const MAGIC: &[u8; 8] = b"ATLASVEC";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

#[derive(Debug, Serialize, Deserialize)]
struct KeyIndex {
    version: u32,
    dim: usize,
    model: String,
    keys: Vec<EntityKey>,
}

pub fn sidecar_path(bin: &Path) -> PathBuf {
    let stem = bin.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    bin.with_file_name(format!("{stem}.keys.json"))
}

pub fn encode(set: &EmbeddingSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * set.dim * set.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(set.dim as u32).to_le_bytes());
    out.extend_from_slice(&(set.len() as u64).to_le_bytes());
    for row in &set.vectors {
        for v in row {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8], keys: Vec<EntityKey>, model: String) -> Result<EmbeddingSet, SemanticsError> {
    let bad = |m: &str| SemanticsError::Store(m.to_string());
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(bad("not a vector store (bad magic)"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let version = u32_at(8);
    if version != VERSION {
        return Err(bad(&format!("unsupported vector store version {version}")));
    }
    let dim = u32_at(12) as usize;
    let n = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")) as usize;
    if bytes.len() != HEADER_LEN + 4 * dim * n {
        return Err(bad("vector store length does not match header"));
    }
    if keys.len() != n {
        return Err(bad("key index and vector store disagree on row count"));
    }
    let vectors = bytes[HEADER_LEN..]
        .chunks_exact(4 * dim.max(1))
        .take(n)
        .map(|row| {
            row.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
                .collect()
        })
        .collect();
    EmbeddingSet::new(keys, vectors, model)
}

pub fn save(set: &EmbeddingSet, bin: &Path) -> Result<(), SemanticsError> {
    let io = |e: std::io::Error| SemanticsError::Store(format!("{}: {e}", bin.display()));
    if let Some(parent) = bin.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(bin, encode(set)).map_err(io)?;
    let index = KeyIndex {
        version: VERSION,
        dim: set.dim,
        model: set.model.clone(),
        keys: set.keys.clone(),
    };
    let json = serde_json::to_string_pretty(&index).expect("key index serializes");
    std::fs::write(sidecar_path(bin), json + "\n").map_err(io)
}

pub fn load(bin: &Path) -> Result<EmbeddingSet, SemanticsError> {
    let io = |p: &Path| {
        let p = p.display().to_string();
        move |e: std::io::Error| SemanticsError::Store(format!("{p}: {e}"))
    };
    let bytes = std::fs::read(bin).map_err(io(bin))?;
    let side = sidecar_path(bin);
    let index: KeyIndex = serde_json::from_str(&std::fs::read_to_string(&side).map_err(io(&side))?)
        .map_err(|e| SemanticsError::Store(format!("{}: {e}", side.display())))?;
    if index.version != VERSION {
        return Err(SemanticsError::Store(format!("unsupported key index version {}", index.version)));
    }
    decode(&bytes, index.keys, index.model)
}
