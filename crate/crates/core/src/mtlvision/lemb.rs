//! Per-view frame embedding files.
//!
//! Layout (little-endian): `b"LEMB"`, `u32` version 1, `u32` header length
//! and header JSON, then records until end of file: `u16` id length, UTF-8
//! frame id, `u8` view (0 camera, 1 screen), `dim` f32 values.

use std::collections::BTreeMap;
use std::io::{ErrorKind, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

const MAGIC: &[u8; 4] = b"LEMB";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LembError {
    #[error("embedding i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not an embedding file (bad magic)")]
    BadMagic,
    #[error("unsupported embedding file version {0}")]
    UnsupportedVersion(u32),
    #[error("embedding header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("record {index}: {reason}")]
    Record { index: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewId {
    Camera = 0,
    Screen = 1,
}

impl ViewId {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(ViewId::Camera),
            1 => Some(ViewId::Screen),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingHeader {
    pub backbone: String,
    pub tap: String,
    pub dim: usize,
    /// Any further producer metadata.
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub frame_id: String,
    pub view: ViewId,
    pub vector: Vec<f32>,
}

pub fn write_lemb<W: Write>(
    mut w: W,
    header: &EmbeddingHeader,
    records: &[EmbeddingRecord],
) -> Result<(), LembError> {
    let h = serde_json::to_vec(header)?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(h.len() as u32).to_le_bytes())?;
    w.write_all(&h)?;
    for (index, r) in records.iter().enumerate() {
        if r.vector.len() != header.dim {
            return Err(LembError::Record {
                index,
                reason: format!("vector has {} values, header says {}", r.vector.len(), header.dim),
            });
        }
        let id_len = u16::try_from(r.frame_id.len()).map_err(|_| LembError::Record {
            index,
            reason: "frame id longer than 65535 bytes".into(),
        })?;
        w.write_all(&id_len.to_le_bytes())?;
        w.write_all(r.frame_id.as_bytes())?;
        w.write_all(&[r.view as u8])?;
        for x in &r.vector {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_lemb<R: Read>(mut r: R) -> Result<(EmbeddingHeader, Vec<EmbeddingRecord>), LembError> {
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    if &b4 != MAGIC {
        return Err(LembError::BadMagic);
    }
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(LembError::UnsupportedVersion(version));
    }
    r.read_exact(&mut b4)?;
    let mut h = vec![0u8; u32::from_le_bytes(b4) as usize];
    r.read_exact(&mut h)?;
    let header: EmbeddingHeader = serde_json::from_slice(&h)?;
    let mut records = Vec::new();
    loop {
        let index = records.len();
        let bad = |reason: String| LembError::Record { index, reason };
        let mut b2 = [0u8; 2];
        match r.read(&mut b2[..1]) {
            Ok(0) => break,
            Ok(_) => {}
            Err(e) if e.kind() == ErrorKind::Interrupted => continue,
            Err(e) => return Err(e.into()),
        }
        r.read_exact(&mut b2[1..]).map_err(|_| bad("truncated record".into()))?;
        let mut id = vec![0u8; u16::from_le_bytes(b2) as usize];
        let mut view = [0u8; 1];
        let mut payload = vec![0u8; header.dim * 4];
        r.read_exact(&mut id)
            .and_then(|_| r.read_exact(&mut view))
            .and_then(|_| r.read_exact(&mut payload))
            .map_err(|_| bad("truncated record".into()))?;
        let frame_id = String::from_utf8(id).map_err(|_| bad("frame id is not UTF-8".into()))?;
        let view = ViewId::from_byte(view[0]).ok_or_else(|| bad(format!("unknown view {}", view[0])))?;
        let vector = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        records.push(EmbeddingRecord { frame_id, view, vector });
    }
    Ok((header, records))
}
