//! Shared run plumbing: output-directory locking, config resolution and the
//! run manifest every command writes alongside its outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scinet_core::data::{LabelMode, PATCH_SIZE};
use scinet_core::hash::Fnv64;
use scinet_core::model::ArchitectureConfig;
use scinet_core::train::TrainConfig;
use scinet_core::{Error, Result};

const LOCK_NAME: &str = ".scinet.lock";

/// Claims an output directory for one run; the lock file is removed on drop.
pub struct OutDir {
    path: PathBuf,
    lock: PathBuf,
}

impl OutDir {
    pub fn claim(path: &Path) -> Result<OutDir> {
        fs::create_dir_all(path)?;
        let lock = path.join(LOCK_NAME);
        match fs::OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => Ok(OutDir {
                path: path.to_path_buf(),
                lock,
            }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Io(
                std::io::Error::new(
                    std::io::ErrorKind::AlreadyExists,
                    format!(
                        "output directory {} is locked by another run (remove {LOCK_NAME} if stale)",
                        path.display()
                    ),
                ),
            )),
            Err(e) => Err(Error::Io(e)),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }
}

impl Drop for OutDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

/// What every run records next to its outputs. Timing lives here (not in the
/// experiment report) so reports stay byte-identical across repeated runs.
#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub resolved_config: serde_json::Value,
    pub input_hashes: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn write(&self, out: &OutDir) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("run manifest serialization failed: {e}")))?;
        fs::write(out.file("run_manifest.json"), json)?;
        Ok(())
    }
}

/// FNV-1a 64 content hash of an input file, hex-encoded.
pub fn file_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::Ingest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut hasher = Fnv64::new();
    hasher.update(&bytes);
    Ok(hasher.finish_hex())
}

/// Optional JSON config file: `{"architecture": {..}, "training": {..}}`,
/// both sections partial. Precedence: defaults < file < command-line flags.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    architecture: Option<serde_json::Value>,
    training: Option<serde_json::Value>,
}

fn overlay<T: Serialize + serde::de::DeserializeOwned>(
    base: &T,
    patch: &serde_json::Value,
    section: &str,
) -> Result<T> {
    let mut value = serde_json::to_value(base)
        .map_err(|e| Error::Config(format!("cannot serialize defaults: {e}")))?;
    let target = value
        .as_object_mut()
        .expect("config structs serialize to objects");
    let patch_obj = patch
        .as_object()
        .ok_or_else(|| Error::Config(format!("'{section}' section must be a JSON object")))?;
    for (key, val) in patch_obj {
        if !target.contains_key(key) {
            return Err(Error::Config(format!(
                "unknown field '{key}' in '{section}' section"
            )));
        }
        target.insert(key.clone(), val.clone());
    }
    serde_json::from_value(value)
        .map_err(|e| Error::Config(format!("invalid '{section}' section: {e}")))
}

/// Resolved architecture + training configuration for one run.
pub fn resolve_configs(
    mode: LabelMode,
    config_path: Option<&Path>,
    seed_flag: Option<u64>,
    epochs_flag: Option<usize>,
) -> Result<(ArchitectureConfig, TrainConfig)> {
    let mut arch = ArchitectureConfig::canonical(mode.num_classes());
    let mut train = TrainConfig::default();

    if let Some(path) = config_path {
        let text = fs::read_to_string(path).map_err(|e| Error::Ingest {
            path: path.to_path_buf(),
            message: format!("cannot read config file: {e}"),
        })?;
        let file: FileConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config file {}: {e}", path.display())))?;
        if let Some(patch) = &file.architecture {
            arch = overlay(&arch, patch, "architecture")?;
        }
        if let Some(patch) = &file.training {
            train = overlay(&train, patch, "training")?;
        }
    }

    if let Some(seed) = seed_flag {
        train.seed = seed;
    }
    if let Some(epochs) = epochs_flag {
        train.epochs = epochs;
    }

    arch.validate()?;
    train.validate()?;
    if arch.input_channels != 3
        || arch.input_height != PATCH_SIZE
        || arch.input_width != PATCH_SIZE
    {
        return Err(Error::Config(format!(
            "the patch pipeline feeds 3x{PATCH_SIZE}x{PATCH_SIZE} inputs; configured input is {}x{}x{}",
            arch.input_channels, arch.input_height, arch.input_width
        )));
    }
    if arch.num_classes > mode.num_classes() {
        return Err(Error::Config(format!(
            "{} classes configured but the selected mode has only {}",
            arch.num_classes,
            mode.num_classes()
        )));
    }
    Ok((arch, train))
}

/// JSON echo of the fully resolved configuration for the run manifest.
pub fn config_json(arch: &ArchitectureConfig, train: &TrainConfig) -> serde_json::Value {
    serde_json::json!({ "architecture": arch, "training": train })
}
