//! Model bundles: a directory of autoencoder checkpoints plus `manifest.json`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autoenc::{read_checkpoint, write_checkpoint, Autoencoder, CheckpointError};

use super::{AugmentationTree, HierarchyConfig, MemoryEntry, FEATURE_SCHEMA_VERSION};

pub const MANIFEST_FILE: &str = "manifest.json";
const FORMAT: &str = "fifth-model";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Checkpoint { path: String, source: CheckpointError },
    #[error("bad manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("unsupported model format `{format}` version {version}")]
    Unsupported { format: String, version: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeFile {
    pub parent: String,
    pub child: String,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub feature_schema_version: u32,
    pub code_size: usize,
    pub config: HierarchyConfig,
    pub definitions: Vec<String>,
    pub encoders: BTreeMap<String, String>,
    pub bridges: Vec<BridgeFile>,
    pub spine_bridges: BTreeMap<String, String>,
    pub memory: BTreeMap<String, Vec<MemoryEntry>>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BundleError + '_ {
    move |source| BundleError::Io { path: path.display().to_string(), source }
}

fn save_model(dir: &Path, name: &str, ae: &Autoencoder) -> Result<(), BundleError> {
    let path = dir.join(name);
    let mut out = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
    write_checkpoint(ae, &mut out).map_err(|source| BundleError::Checkpoint { path: path.display().to_string(), source })?;
    out.flush().map_err(io_err(&path))
}

fn load_model(dir: &Path, name: &str) -> Result<Autoencoder, BundleError> {
    let path = dir.join(name);
    let mut input = BufReader::new(File::open(&path).map_err(io_err(&path))?);
    read_checkpoint(&mut input).map_err(|source| BundleError::Checkpoint { path: path.display().to_string(), source })
}

/// Writes every encoder, bridge and spine bridge, then the manifest.
pub fn save_bundle(tree: &AugmentationTree, dir: &Path) -> Result<Manifest, BundleError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut manifest = Manifest {
        format: FORMAT.into(),
        feature_schema_version: FEATURE_SCHEMA_VERSION,
        code_size: tree.config.code,
        config: tree.config,
        definitions: tree.encoders.keys().cloned().collect(),
        encoders: BTreeMap::new(),
        bridges: Vec::new(),
        spine_bridges: BTreeMap::new(),
        memory: tree.memory.clone(),
    };
    for (i, (def, ae)) in tree.encoders.iter().enumerate() {
        let file = format!("encoder-{i}.ae");
        save_model(dir, &file, ae)?;
        manifest.encoders.insert(def.clone(), file);
    }
    for (i, ((parent, child), ae)) in tree.bridges.iter().enumerate() {
        let file = format!("bridge-{i}.ae");
        save_model(dir, &file, ae)?;
        manifest.bridges.push(BridgeFile { parent: parent.clone(), child: child.clone(), file });
    }
    for (i, (def, ae)) in tree.spine_bridges.iter().enumerate() {
        let file = format!("spine-{i}.ae");
        save_model(dir, &file, ae)?;
        manifest.spine_bridges.insert(def.clone(), file);
    }
    let path = dir.join(MANIFEST_FILE);
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(&path, json).map_err(io_err(&path))?;
    Ok(manifest)
}

pub fn load_bundle(dir: &Path) -> Result<AugmentationTree, BundleError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.format != FORMAT || manifest.feature_schema_version != FEATURE_SCHEMA_VERSION {
        return Err(BundleError::Unsupported { format: manifest.format, version: manifest.feature_schema_version });
    }
    let mut tree = AugmentationTree::new(manifest.config);
    for (def, file) in &manifest.encoders {
        tree.encoders.insert(def.clone(), load_model(dir, file)?);
    }
    for b in &manifest.bridges {
        tree.bridges.insert((b.parent.clone(), b.child.clone()), load_model(dir, &b.file)?);
    }
    for (def, file) in &manifest.spine_bridges {
        tree.spine_bridges.insert(def.clone(), load_model(dir, file)?);
    }
    tree.memory = manifest.memory;
    Ok(tree)
}
