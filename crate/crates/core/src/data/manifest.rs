//! Manifest ingestion: a CSV of `path,device,sensor` rows, one per image.
//!
//! Image paths are resolved relative to the manifest's directory. PNG and
//! binary PPM (P6) are accepted; JPEG is refused unless explicitly allowed,
//! because lossy recompression perturbs the sensor noise the classifier
//! feeds on.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::data::labels::{Device, Sensor};
use crate::error::{Error, Result};
use crate::exec;
use crate::tensor::Tensor;

pub const MANIFEST_HEADER: &str = "path,device,sensor";

/// One ingested image with its provenance labels. Pixels are `[3, H, W]`
/// scaled to `[0, 1]`.
#[derive(Clone, Debug)]
pub struct ImageRecord {
    pub image_id: String,
    pub pixels: Tensor<f32>,
    pub device: Device,
    pub sensor: Sensor,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ManifestOptions {
    pub allow_jpeg: bool,
}

struct ManifestRow {
    line: usize,
    path: String,
    device: Device,
    sensor: Sensor,
}

fn parse_rows(path: &Path, text: &str) -> Result<Vec<ManifestRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == MANIFEST_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Manifest {
                line: 1,
                message: format!("expected header '{MANIFEST_HEADER}', got '{}'", header.trim()),
            })
        }
        None => {
            return Err(Error::Manifest {
                line: 1,
                message: "manifest is empty (missing header)".into(),
            })
        }
    }

    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in lines {
        let line = idx + 1; // 1-based, like editors
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Manifest {
                line,
                message: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let device = Device::from_token(fields[1]).ok_or_else(|| Error::Manifest {
            line,
            message: format!("unknown device label '{}'", fields[1]),
        })?;
        let sensor = Sensor::from_token(fields[2]).ok_or_else(|| Error::Manifest {
            line,
            message: format!("unknown sensor label '{}'", fields[2]),
        })?;
        if sensor.device() != device {
            return Err(Error::Manifest {
                line,
                message: format!(
                    "sensor {} belongs to device {}, not {}",
                    sensor.token(),
                    sensor.device().token(),
                    device.token()
                ),
            });
        }
        if !seen.insert(fields[0].to_string()) {
            return Err(Error::Manifest {
                line,
                message: format!("duplicate image id '{}'", fields[0]),
            });
        }
        rows.push(ManifestRow {
            line,
            path: fields[0].to_string(),
            device,
            sensor,
        });
    }
    if rows.is_empty() {
        log::warn!("manifest {} lists no images", path.display());
    }
    Ok(rows)
}

fn decode_image(path: &Path, options: &ManifestOptions) -> Result<Tensor<f32>> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    if matches!(ext.as_str(), "jpg" | "jpeg") {
        if !options.allow_jpeg {
            return Err(Error::Ingest {
                path: path.to_path_buf(),
                message: "JPEG input is disabled by default (lossy recompression disturbs \
                          sensor noise); pass the permissive flag to accept it"
                    .into(),
            });
        }
        log::warn!(
            "ingesting JPEG {}: lossy compression may weaken the sensor fingerprint",
            path.display()
        );
    }

    let img = image::open(path).map_err(|e| Error::Ingest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = img.to_rgb8();
    let (width, height) = (rgb.width() as usize, rgb.height() as usize);
    let raw = rgb.into_raw();

    // Interleaved RGB -> planar [3, H, W] in [0, 1].
    let mut data = vec![0.0f32; 3 * height * width];
    for (i, px) in raw.chunks_exact(3).enumerate() {
        data[i] = px[0] as f32 / 255.0;
        data[height * width + i] = px[1] as f32 / 255.0;
        data[2 * height * width + i] = px[2] as f32 / 255.0;
    }
    Tensor::from_vec(&[3, height, width], data)
}

/// Loads every image listed in the manifest at `path`.
pub fn load_manifest(path: &Path, options: &ManifestOptions) -> Result<Vec<ImageRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Ingest {
        path: path.to_path_buf(),
        message: format!("cannot read manifest: {e}"),
    })?;
    let rows = parse_rows(path, &text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let results = exec::map(&rows, |row| -> Result<ImageRecord> {
        let image_path = resolve(base, &row.path);
        let pixels = decode_image(&image_path, options)?;
        Ok(ImageRecord {
            image_id: row.path.clone(),
            pixels,
            device: row.device,
            sensor: row.sensor,
        })
    });

    let mut records = Vec::with_capacity(rows.len());
    for (result, row) in results.into_iter().zip(&rows) {
        records.push(result.map_err(|e| match e {
            e @ Error::Ingest { .. } => e,
            other => Error::Manifest {
                line: row.line,
                message: other.to_string(),
            },
        })?);
    }
    Ok(records)
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Writes a manifest for the given records; `paths` pairs with `records`.
pub fn write_manifest(path: &Path, rows: &[(String, Device, Sensor)]) -> Result<()> {
    let mut out = String::from(MANIFEST_HEADER);
    out.push('\n');
    for (p, device, sensor) in rows {
        out.push_str(&format!("{p},{},{}\n", device.token(), sensor.token()));
    }
    std::fs::write(path, out)?;
    Ok(())
}
