//! Binary checkpoint container.
//!
//! Layout (little-endian): `b"DNCK"`, `u32` version, `u32` metadata length and
//! metadata JSON, `u32` section count, then per section a `u16` name length,
//! the UTF-8 name, a `u8` kind (0 = f32 array, 1 = UTF-8 text), a `u64`
//! payload length and the payload. Floats are stored as f32.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::net::{Activation, DenseNet, Layer};
use super::NetError;

const MAGIC: &[u8; 4] = b"DNCK";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("checkpoint metadata: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing checkpoint entry {0:?}")]
    Missing(String),
    #[error("section {0:?} has the wrong kind")]
    WrongKind(String),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SectionData {
    F32(Vec<f32>),
    Text(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerArch {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetArchitecture {
    pub layers: Vec<LayerArch>,
    pub seed: u64,
}

impl NetArchitecture {
    pub fn of(net: &DenseNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerArch {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    activation: l.activation,
                })
                .collect(),
            seed: net.seed,
        }
    }
}

/// Named metadata entries plus named binary sections.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub metadata: BTreeMap<String, serde_json::Value>,
    pub sections: BTreeMap<String, SectionData>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_meta<T: Serialize>(&mut self, key: &str, value: &T) -> Result<(), CheckpointError> {
        self.metadata.insert(key.to_owned(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn meta<T: DeserializeOwned>(&self, key: &str) -> Result<T, CheckpointError> {
        let v = self
            .metadata
            .get(key)
            .ok_or_else(|| CheckpointError::Missing(key.to_owned()))?;
        Ok(serde_json::from_value(v.clone())?)
    }

    pub fn put_floats(&mut self, name: &str, values: &[f64]) {
        self.sections.insert(
            name.to_owned(),
            SectionData::F32(values.iter().map(|&v| v as f32).collect()),
        );
    }

    pub fn put_text(&mut self, name: &str, text: String) {
        self.sections.insert(name.to_owned(), SectionData::Text(text));
    }

    pub fn floats(&self, name: &str) -> Result<Vec<f64>, CheckpointError> {
        match self.sections.get(name) {
            Some(SectionData::F32(v)) => Ok(v.iter().map(|&x| x as f64).collect()),
            Some(_) => Err(CheckpointError::WrongKind(name.to_owned())),
            None => Err(CheckpointError::Missing(name.to_owned())),
        }
    }

    pub fn text(&self, name: &str) -> Result<&str, CheckpointError> {
        match self.sections.get(name) {
            Some(SectionData::Text(t)) => Ok(t),
            Some(_) => Err(CheckpointError::WrongKind(name.to_owned())),
            None => Err(CheckpointError::Missing(name.to_owned())),
        }
    }

    /// Stores `net` under `name`: its architecture in metadata and its
    /// parameters in `{name}.layer{i}.weight` / `.bias` sections.
    pub fn put_net(&mut self, name: &str, net: &DenseNet) -> Result<(), CheckpointError> {
        self.set_meta(&format!("{name}.architecture"), &NetArchitecture::of(net))?;
        for (i, l) in net.layers.iter().enumerate() {
            self.put_floats(&format!("{name}.layer{i}.weight"), &l.weights);
            self.put_floats(&format!("{name}.layer{i}.bias"), &l.bias);
        }
        Ok(())
    }

    pub fn net(&self, name: &str) -> Result<DenseNet, CheckpointError> {
        let arch: NetArchitecture = self.meta(&format!("{name}.architecture"))?;
        let mut layers = Vec::with_capacity(arch.layers.len());
        for (i, la) in arch.layers.iter().enumerate() {
            layers.push(Layer {
                inputs: la.inputs,
                outputs: la.outputs,
                weights: self.floats(&format!("{name}.layer{i}.weight"))?,
                bias: self.floats(&format!("{name}.layer{i}.bias"))?,
                activation: la.activation,
            });
        }
        Ok(DenseNet::from_layers(layers, arch.seed)?)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), CheckpointError> {
        let meta = serde_json::to_vec(&self.metadata)?;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&len_u32(meta.len())?.to_le_bytes())?;
        w.write_all(&meta)?;
        w.write_all(&len_u32(self.sections.len())?.to_le_bytes())?;
        for (name, data) in &self.sections {
            let name_len = u16::try_from(name.len())
                .map_err(|_| CheckpointError::Malformed(format!("section name too long: {name}")))?;
            w.write_all(&name_len.to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            match data {
                SectionData::F32(v) => {
                    w.write_all(&[0])?;
                    w.write_all(&((v.len() * 4) as u64).to_le_bytes())?;
                    for x in v {
                        w.write_all(&x.to_le_bytes())?;
                    }
                }
                SectionData::Text(t) => {
                    w.write_all(&[1])?;
                    w.write_all(&(t.len() as u64).to_le_bytes())?;
                    w.write_all(t.as_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, CheckpointError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let meta_len = read_u32(&mut r)? as usize;
        let metadata = serde_json::from_slice(&read_vec(&mut r, meta_len)?)?;
        let count = read_u32(&mut r)?;
        let mut sections = BTreeMap::new();
        for _ in 0..count {
            let mut nl = [0u8; 2];
            r.read_exact(&mut nl)?;
            let name = String::from_utf8(read_vec(&mut r, u16::from_le_bytes(nl) as usize)?)
                .map_err(|_| CheckpointError::Malformed("section name is not UTF-8".into()))?;
            let mut kind = [0u8; 1];
            r.read_exact(&mut kind)?;
            let mut pl = [0u8; 8];
            r.read_exact(&mut pl)?;
            let len = usize::try_from(u64::from_le_bytes(pl))
                .map_err(|_| CheckpointError::Malformed("section too large".into()))?;
            let payload = read_vec(&mut r, len)?;
            let data = match kind[0] {
                0 => {
                    if len % 4 != 0 {
                        return Err(CheckpointError::Malformed(format!(
                            "f32 section {name:?} has {len} bytes"
                        )));
                    }
                    SectionData::F32(
                        payload
                            .chunks_exact(4)
                            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                            .collect(),
                    )
                }
                1 => SectionData::Text(
                    String::from_utf8(payload)
                        .map_err(|_| CheckpointError::Malformed(format!("text section {name:?} is not UTF-8")))?,
                ),
                k => return Err(CheckpointError::Malformed(format!("unknown section kind {k}"))),
            };
            sections.insert(name, data);
        }
        Ok(Self { metadata, sections })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

fn len_u32(n: usize) -> Result<u32, CheckpointError> {
    u32::try_from(n).map_err(|_| CheckpointError::Malformed(format!("length {n} exceeds u32")))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, CheckpointError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_vec<R: Read>(r: &mut R, len: usize) -> Result<Vec<u8>, CheckpointError> {
    let mut v = Vec::new();
    r.by_ref().take(len as u64).read_to_end(&mut v)?;
    if v.len() != len {
        return Err(CheckpointError::Malformed("truncated".into()));
    }
    Ok(v)
}
