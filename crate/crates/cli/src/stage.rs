//! Stage manifests: every stage directory holds a `stage.json` with the
//! SHA-256 of each input it read and each file it wrote.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::CliError;

pub const STAGE_FILE: &str = "stage.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub version: String,
    pub config: PipelineConfig,
    /// Input path (relative to the output root, or as given for external
    /// files) to content hash.
    pub inputs: BTreeMap<String, String>,
    /// File name within the stage directory to content hash.
    pub outputs: BTreeMap<String, String>,
}

impl StageManifest {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let p = dir.join(STAGE_FILE);
        let bytes = fs::read(&p).map_err(|_| CliError::MissingInput(format!("{} not found", p.display())))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    /// Recomputes every output hash against the files on disk.
    pub fn verify(&self, dir: &Path) -> Result<(), CliError> {
        for (name, want) in &self.outputs {
            let p = dir.join(name);
            let bytes = fs::read(&p).map_err(|_| CliError::MissingInput(format!("{} not found", p.display())))?;
            if sha256_hex(&bytes) != *want {
                return Err(CliError::Tampered(format!("{} does not match its stage manifest", p.display())));
            }
        }
        Ok(())
    }
}

/// Reads prior-stage artifacts under the output root, checking each one
/// against the hash its stage recorded.
pub struct Inputs {
    root: PathBuf,
    hashes: BTreeMap<String, String>,
    manifests: BTreeMap<String, StageManifest>,
}

impl Inputs {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
            hashes: BTreeMap::new(),
            manifests: BTreeMap::new(),
        }
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.root.join(rel).is_file()
    }

    /// `rel` is `<stage dir>/<file>`; the producing stage is the parent.
    pub fn read(&mut self, rel: &str, producer: &str) -> Result<Vec<u8>, CliError> {
        let path = self.root.join(rel);
        let (stage_dir, name) = rel
            .rsplit_once('/')
            .ok_or_else(|| CliError::Usage(format!("input {rel} lacks a stage directory")))?;
        let bytes = fs::read(&path).map_err(|_| {
            CliError::MissingInput(format!("{} not found; run `{producer}` first", path.display()))
        })?;
        if !self.manifests.contains_key(stage_dir) {
            let m = StageManifest::load(&self.root.join(stage_dir)).map_err(|e| match e {
                CliError::MissingInput(d) => CliError::MissingInput(format!("{d}; run `{producer}` first")),
                other => other,
            })?;
            self.manifests.insert(stage_dir.to_owned(), m);
        }
        let hash = sha256_hex(&bytes);
        match self.manifests[stage_dir].outputs.get(name) {
            Some(h) if *h == hash => {}
            Some(_) => {
                return Err(CliError::Tampered(format!(
                    "{} does not match its stage manifest",
                    path.display()
                )))
            }
            None => {
                return Err(CliError::Tampered(format!(
                    "{} is not recorded in {stage_dir}/{STAGE_FILE}",
                    path.display()
                )))
            }
        }
        self.hashes.insert(rel.to_owned(), hash);
        Ok(bytes)
    }

    pub fn hash_of(&self, rel: &str) -> Option<&str> {
        self.hashes.get(rel).map(String::as_str)
    }

    /// Records an input from outside the output root.
    pub fn external(&mut self, key: String, bytes: &[u8]) {
        self.hashes.insert(key, sha256_hex(bytes));
    }
}

/// Collects the outputs of one stage and finishes with its manifest.
pub struct StageWriter {
    name: String,
    dir: PathBuf,
    outputs: BTreeMap<String, String>,
}

impl StageWriter {
    /// Clears any previous contents of the stage directory.
    pub fn create(root: &Path, name: &str) -> Result<Self, CliError> {
        let dir = root.join(name);
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
        Ok(Self {
            name: name.to_owned(),
            dir,
            outputs: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, file: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir.join(file), bytes)?;
        self.outputs.insert(file.to_owned(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, file: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(file, &bytes)
    }

    /// Registers a file written directly into the stage directory.
    pub fn record(&mut self, file: &str) -> Result<(), CliError> {
        let bytes = fs::read(self.dir.join(file))?;
        self.outputs.insert(file.to_owned(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn finish(self, config: &PipelineConfig, inputs: &Inputs) -> Result<PathBuf, CliError> {
        let manifest = StageManifest {
            stage: self.name,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config: config.clone(),
            inputs: inputs.hashes.clone(),
            outputs: self.outputs,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(self.dir.join(STAGE_FILE), bytes)?;
        Ok(self.dir)
    }
}
