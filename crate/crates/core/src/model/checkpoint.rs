//! Versioned binary checkpoint format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SCIN"
//! 4       1     format version (currently 1)
//! 5       4     header length H (u32)
//! 9       H     UTF-8 JSON header: config, channel means, ordered param specs
//! 9+H     4*P   payload: all parameter tensors as f32, row-major, in order
//! end-8   8     FNV-1a 64 checksum of every preceding byte (u64)
//! ```
//!
//! Loading an f32 checkpoint reproduces the saved parameters bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::Fnv64;
use crate::model::config::ArchitectureConfig;
use crate::model::network::{Network, ParamSpec};
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"SCIN";
pub const CHECKPOINT_VERSION: u8 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: ArchitectureConfig,
    /// Per-channel training-set means subtracted from inputs; stored so
    /// evaluation can reproduce the training-time normalization.
    channel_means: [f32; 3],
    params: Vec<ParamSpec>,
}

/// A checkpoint loaded back into memory.
#[derive(Debug)]
pub struct LoadedCheckpoint {
    pub network: Network<f32>,
    pub channel_means: [f32; 3],
}

fn corrupt(field: &'static str, message: impl Into<String>) -> Error {
    Error::CorruptCheckpoint {
        field,
        message: message.into(),
    }
}

pub fn save_checkpoint(net: &Network<f32>, channel_means: [f32; 3], path: &Path) -> Result<()> {
    let header = Header {
        config: net.config().clone(),
        channel_means,
        params: Network::<f32>::param_specs(net.config())?,
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| Error::Config(format!("failed to encode checkpoint header: {e}")))?;

    let payload_len: usize = net.param_tensors().iter().map(|t| 4 * t.len()).sum();
    let mut buf = Vec::with_capacity(4 + 1 + 4 + header_json.len() + payload_len + 8);
    buf.extend_from_slice(&CHECKPOINT_MAGIC);
    buf.push(CHECKPOINT_VERSION);
    buf.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header_json);
    for tensor in net.param_tensors() {
        for &v in tensor.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut hasher = Fnv64::new();
    hasher.update(&buf);
    buf.extend_from_slice(&hasher.finish().to_le_bytes());

    fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<LoadedCheckpoint> {
    let bytes = fs::read(path)?;
    parse_checkpoint(&bytes)
}

fn parse_checkpoint(bytes: &[u8]) -> Result<LoadedCheckpoint> {
    const PREFIX: usize = 4 + 1 + 4;
    if bytes.len() < PREFIX + 8 {
        return Err(corrupt("length", format!("file holds only {} bytes", bytes.len())));
    }
    if bytes[..4] != CHECKPOINT_MAGIC {
        return Err(corrupt("magic", format!("expected {CHECKPOINT_MAGIC:?}, got {:?}", &bytes[..4])));
    }
    if bytes[4] != CHECKPOINT_VERSION {
        return Err(corrupt(
            "version",
            format!("expected {CHECKPOINT_VERSION}, got {}", bytes[4]),
        ));
    }
    let header_len = u32::from_le_bytes(bytes[5..9].try_into().expect("length checked")) as usize;
    if bytes.len() < PREFIX + header_len + 8 {
        return Err(corrupt(
            "header_length",
            format!("header claims {header_len} bytes but file is truncated"),
        ));
    }

    let stored = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().expect("length checked"));
    let mut hasher = Fnv64::new();
    hasher.update(&bytes[..bytes.len() - 8]);
    let computed = hasher.finish();
    if stored != computed {
        return Err(corrupt(
            "checksum",
            format!("stored {stored:#018x} != computed {computed:#018x}"),
        ));
    }

    let header: Header = serde_json::from_slice(&bytes[PREFIX..PREFIX + header_len])
        .map_err(|e| corrupt("header", e.to_string()))?;
    let expected_specs = Network::<f32>::param_specs(&header.config)
        .map_err(|e| corrupt("header", format!("config does not describe a buildable network: {e}")))?;
    if header.params != expected_specs {
        return Err(corrupt("params", "parameter table does not match the config".to_string()));
    }

    let total: usize = expected_specs.iter().map(|s| s.shape.iter().product::<usize>()).sum();
    let payload = &bytes[PREFIX + header_len..bytes.len() - 8];
    if payload.len() != 4 * total {
        return Err(corrupt(
            "payload_length",
            format!("expected {} bytes of parameters, got {}", 4 * total, payload.len()),
        ));
    }

    let mut tensors = Vec::with_capacity(expected_specs.len());
    let mut offset = 0;
    for spec in &expected_specs {
        let count: usize = spec.shape.iter().product();
        let mut data = Vec::with_capacity(count);
        for chunk in payload[offset..offset + 4 * count].chunks_exact(4) {
            data.push(f32::from_le_bytes(chunk.try_into().expect("chunk of 4")));
        }
        offset += 4 * count;
        tensors.push(Tensor::from_vec(&spec.shape, data)?);
    }

    Ok(LoadedCheckpoint {
        network: Network::from_parts(&header.config, tensors)?,
        channel_means: header.channel_means,
    })
}
