//! Small shared persistence helpers. Each file format is owned by the
//! module that defines its payload type; this module only holds the pieces
//! they have in common.

use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Hex-encoded SHA-256 of a byte string; used to fingerprint checkpoint
/// files inside sample metadata.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Writes a JSON array with one record per line: compact enough for large
/// files, still line-diffable.
pub fn write_json_records<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut out = String::from("[");
    for (i, rec) in records.iter().enumerate() {
        out.push_str(if i == 0 { "\n  " } else { ",\n  " });
        out.push_str(&serde_json::to_string(rec)?);
    }
    out.push_str("\n]\n");
    fs::write(path, out)?;
    Ok(())
}
