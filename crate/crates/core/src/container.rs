//! On-disk container for named matrices: a magic line, one JSON header line,
//! then the raw little-endian `f64` payload.
//!
//! The header records each tensor's name and shape plus the payload length and
//! SHA-256 digest, so truncation and bit flips are detected on load.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::Matrix;

const MAGIC: &str = "KOGNER-CONTAINER/1";

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header<M> {
    kind: String,
    meta: M,
    tensors: Vec<TensorEntry>,
    payload_len: usize,
    payload_sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_container<M: Serialize>(
    path: &Path,
    kind: &str,
    meta: &M,
    tensors: &[(&str, &Matrix)],
) -> Result<()> {
    let mut payload = Vec::with_capacity(tensors.iter().map(|(_, m)| m.len() * 8).sum());
    for (_, m) in tensors {
        for v in m.values() {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let header = Header {
        kind: kind.to_string(),
        meta,
        tensors: tensors
            .iter()
            .map(|(name, m)| TensorEntry {
                name: name.to_string(),
                rows: m.rows(),
                cols: m.cols(),
            })
            .collect(),
        payload_len: payload.len(),
        payload_sha256: sha256_hex(&payload),
    };
    let mut out = Vec::with_capacity(payload.len() + 4096);
    writeln!(out, "{MAGIC}")?;
    serde_json::to_writer(&mut out, &header)?;
    out.push(b'\n');
    out.extend_from_slice(&payload);
    fs::write(path, out)?;
    Ok(())
}

pub fn read_container<M: DeserializeOwned>(
    path: &Path,
    kind: &str,
) -> Result<(M, Vec<(String, Matrix)>)> {
    let bytes = fs::read(path)?;
    let integrity = |msg: String| Error::Integrity(format!("{}: {msg}", path.display()));

    let magic_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| integrity("missing magic line".into()))?;
    if &bytes[..magic_end] != MAGIC.as_bytes() {
        return Err(integrity("not a kogner container".into()));
    }
    let rest = &bytes[magic_end + 1..];
    let header_end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| integrity("truncated header".into()))?;
    let header: Header<M> = serde_json::from_slice(&rest[..header_end])
        .map_err(|e| integrity(format!("unreadable header: {e}")))?;
    if header.kind != kind {
        return Err(integrity(format!(
            "expected a {kind} container, found {}",
            header.kind
        )));
    }
    let payload = &rest[header_end + 1..];
    if payload.len() != header.payload_len {
        return Err(integrity(format!(
            "payload length {} does not match header {}",
            payload.len(),
            header.payload_len
        )));
    }
    if sha256_hex(payload) != header.payload_sha256 {
        return Err(integrity("payload checksum mismatch".into()));
    }
    let expected: usize = header.tensors.iter().map(|t| t.rows * t.cols * 8).sum();
    if expected != payload.len() {
        return Err(integrity("tensor shapes do not cover the payload".into()));
    }

    let mut tensors = Vec::with_capacity(header.tensors.len());
    let mut offset = 0;
    for t in header.tensors {
        let n = t.rows * t.cols;
        let values = payload[offset..offset + n * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        offset += n * 8;
        tensors.push((t.name, Matrix::from_vec(t.rows, t.cols, values)?));
    }
    Ok((header.meta, tensors))
}
