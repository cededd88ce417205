//! Synthetic camera simulator for desk-scale verification.
//!
//! Each simulated sensor owns a fixed multiplicative fingerprint (zero-mean
//! gaussian, tiled across the frame) on top of which every image adds fresh
//! readout noise:
//!
//! ```text
//! image = clamp(base * (1 + fingerprint) + readout, 0, 1)
//! ```
//!
//! where `base` is a smooth random field regenerated per image: per-pixel
//! N(0.5, 0.2) blurred with the separable 5x5 binomial kernel
//! [1,4,6,4,1]/16 (clamp-to-edge borders). Correlated sensor groups model
//! cameras of one device: they share a device pattern and differ only by a
//! small per-sensor delta.

use serde::{Deserialize, Serialize};

use crate::data::labels::{Device, Sensor};
use crate::data::manifest::ImageRecord;
use crate::data::patch::PATCH_SIZE;
use crate::error::{Error, Result};
use crate::exec;
use crate::rng::Rng;
use crate::tensor::Tensor;

/// One simulated sensor class.
#[derive(Clone, Debug)]
pub struct SyntheticCameraSpec {
    pub sensor: Sensor,
    /// Multiplicative pattern `[3, 32, 32]`, fixed for the class, tiled to
    /// image size from the image origin.
    pub fingerprint: Tensor<f32>,
    pub readout_std: f64,
    /// Sensors sharing a group id share a device pattern.
    pub correlation_group: Option<usize>,
}

/// Generation parameters; the sidecar JSON written next to a synthetic
/// dataset serializes exactly this.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub classes: usize,
    pub images_per_class: usize,
    pub image_size: usize,
    pub sigma_fingerprint: f64,
    pub sigma_readout: f64,
    /// Group sensors of the same device around a shared pattern.
    pub correlated: bool,
    /// Per-sensor delta std as a fraction of `sigma_fingerprint` (correlated
    /// groups only).
    pub delta_fraction: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            classes: 5,
            images_per_class: 100,
            image_size: 128,
            sigma_fingerprint: 0.05,
            sigma_readout: 0.01,
            correlated: false,
            delta_fraction: 0.25,
            seed: 42,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.classes > Sensor::ALL.len() {
            return Err(Error::InvalidParameter(format!(
                "classes must be in 1..={}, got {}",
                Sensor::ALL.len(),
                self.classes
            )));
        }
        if self.images_per_class == 0 {
            return Err(Error::InvalidParameter("images_per_class must be >= 1".into()));
        }
        if self.image_size < PATCH_SIZE {
            return Err(Error::InvalidParameter(format!(
                "image_size must be >= {PATCH_SIZE}, got {}",
                self.image_size
            )));
        }
        if self.sigma_fingerprint < 0.0 || !self.sigma_fingerprint.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma_fingerprint must be >= 0, got {}",
                self.sigma_fingerprint
            )));
        }
        if self.sigma_readout < 0.0 || !self.sigma_readout.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma_readout must be >= 0, got {}",
                self.sigma_readout
            )));
        }
        if self.delta_fraction < 0.0 || !self.delta_fraction.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "delta_fraction must be >= 0, got {}",
                self.delta_fraction
            )));
        }
        Ok(())
    }
}

/// Draws the per-class fingerprints. Classes map onto the first `classes`
/// sensors of the vocabulary; in correlated mode, sensors of one device share
/// a device pattern plus a small per-sensor delta.
pub fn make_camera_specs(params: &SynthParams, rng: &mut Rng) -> Result<Vec<SyntheticCameraSpec>> {
    params.validate()?;
    let sensors = &Sensor::ALL[..params.classes];
    let fp_shape = [3, PATCH_SIZE, PATCH_SIZE];

    if !params.correlated {
        return sensors
            .iter()
            .map(|&sensor| {
                Ok(SyntheticCameraSpec {
                    sensor,
                    fingerprint: Tensor::gaussian(rng, &fp_shape, 0.0, params.sigma_fingerprint)?,
                    readout_std: params.sigma_readout,
                    correlation_group: None,
                })
            })
            .collect();
    }

    // Device patterns first (in device order), then per-sensor deltas.
    let mut device_patterns: Vec<Option<Tensor<f32>>> = vec![None; Device::ALL.len()];
    for &sensor in sensors {
        let d = sensor.device().index();
        if device_patterns[d].is_none() {
            device_patterns[d] =
                Some(Tensor::gaussian(rng, &fp_shape, 0.0, params.sigma_fingerprint)?);
        }
    }
    let delta_std = params.delta_fraction * params.sigma_fingerprint;
    sensors
        .iter()
        .map(|&sensor| {
            let d = sensor.device().index();
            let shared = device_patterns[d].as_ref().expect("pattern drawn above");
            let delta = Tensor::<f32>::gaussian(rng, &fp_shape, 0.0, delta_std)?;
            let data = shared
                .data()
                .iter()
                .zip(delta.data())
                .map(|(&a, &b)| a + b)
                .collect();
            Ok(SyntheticCameraSpec {
                sensor,
                fingerprint: Tensor::from_vec(&fp_shape, data)?,
                readout_std: params.sigma_readout,
                correlation_group: Some(d),
            })
        })
        .collect()
}

/// Renders `images_per_class` images per spec. Every image draws from its own
/// stream (seeds taken from `rng` in image order), so generation is
/// deterministic and embarrassingly parallel.
pub fn generate_synthetic(
    specs: &[SyntheticCameraSpec],
    images_per_class: usize,
    image_size: usize,
    rng: &mut Rng,
) -> Result<Vec<ImageRecord>> {
    if specs.is_empty() {
        return Err(Error::InvalidParameter("at least one camera spec is required".into()));
    }
    if images_per_class == 0 {
        return Err(Error::InvalidParameter("images_per_class must be >= 1".into()));
    }
    if image_size < PATCH_SIZE {
        return Err(Error::InvalidParameter(format!(
            "image_size must be >= {PATCH_SIZE}, got {image_size}"
        )));
    }
    for spec in specs {
        if spec.readout_std < 0.0 || !spec.readout_std.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "readout_std must be >= 0, got {}",
                spec.readout_std
            )));
        }
    }

    let total = specs.len() * images_per_class;
    let jobs: Vec<(usize, usize, u64)> = (0..total)
        .map(|idx| (idx / images_per_class, idx % images_per_class, rng.next_u64()))
        .collect();

    let records = exec::map(&jobs, |&(class, i, seed)| {
        let spec = &specs[class];
        let mut image_rng = Rng::new(seed);
        let pixels = render_image(spec, image_size, &mut image_rng);
        ImageRecord {
            image_id: format!("{}_{i:05}", spec.sensor.token()),
            pixels,
            device: spec.sensor.device(),
            sensor: spec.sensor,
        }
    });
    Ok(records)
}

/// Convenience wrapper: specs plus rendering from one parameter set.
pub fn generate_dataset(params: &SynthParams) -> Result<Vec<ImageRecord>> {
    let mut rng = Rng::new(params.seed);
    let specs = make_camera_specs(params, &mut rng)?;
    generate_synthetic(&specs, params.images_per_class, params.image_size, &mut rng)
}

fn render_image(spec: &SyntheticCameraSpec, size: usize, rng: &mut Rng) -> Tensor<f32> {
    let plane = size * size;
    let mut data = vec![0.0f32; 3 * plane];

    // Smooth base field, one plane per channel.
    for c in 0..3 {
        let mut field: Vec<f32> = (0..plane).map(|_| rng.gaussian(0.5, 0.2) as f32).collect();
        blur5(&mut field, size, size);
        data[c * plane..(c + 1) * plane].copy_from_slice(&field);
    }

    // Multiplicative fingerprint (tiled) plus fresh readout noise, clamped.
    let fp = spec.fingerprint.data();
    for c in 0..3 {
        let fp_plane = &fp[c * PATCH_SIZE * PATCH_SIZE..(c + 1) * PATCH_SIZE * PATCH_SIZE];
        let out = &mut data[c * plane..(c + 1) * plane];
        for y in 0..size {
            let fp_row = &fp_plane[(y % PATCH_SIZE) * PATCH_SIZE..(y % PATCH_SIZE + 1) * PATCH_SIZE];
            for x in 0..size {
                let v = out[y * size + x] * (1.0 + fp_row[x % PATCH_SIZE])
                    + rng.gaussian(0.0, spec.readout_std) as f32;
                out[y * size + x] = v.clamp(0.0, 1.0);
            }
        }
    }

    Tensor::from_vec(&[3, size, size], data).expect("shape matches buffer")
}

/// Separable 5x5 binomial blur ([1,4,6,4,1]/16 per axis), clamp-to-edge.
pub fn blur5(plane: &mut [f32], height: usize, width: usize) {
    const TAPS: [f32; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
    let clamp = |v: isize, max: usize| v.clamp(0, max as isize - 1) as usize;

    let mut tmp = vec![0.0f32; plane.len()];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        let out = &mut tmp[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (t, &w) in TAPS.iter().enumerate() {
                acc += w * row[clamp(x as isize + t as isize - 2, width)];
            }
            out[x] = acc;
        }
    }
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (t, &w) in TAPS.iter().enumerate() {
                let yy = clamp(y as isize + t as isize - 2, height);
                acc += w * tmp[yy * width + x];
            }
            plane[y * width + x] = acc;
        }
    }
}
