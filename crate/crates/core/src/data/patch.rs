//! The patch pipeline: non-overlapping 32x32 tiles cut from a centered crop,
//! plus per-channel mean normalization with training-fold statistics.
//!
//! Tiling never resamples pixels; resampling would destroy the sensor noise
//! the classifier depends on.

use crate::data::labels::LabelMode;
use crate::data::manifest::ImageRecord;
use crate::error::{Error, Result};
use crate::exec;
use crate::tensor::Tensor;

/// Patch side length in pixels.
pub const PATCH_SIZE: usize = 32;

/// The tiled region is capped at 512x512 (centered), which yields the
/// standard 256 patches per sufficiently large image.
pub const MAX_REGION: usize = 512;

/// A labeled 32x32 patch carrying the id of the image it was cut from.
#[derive(Clone, Debug)]
pub struct Patch {
    pub pixels: Tensor<f32>,
    pub label: usize,
    pub source_image_id: String,
}

/// A labeled patch collection for one experiment.
#[derive(Clone, Debug)]
pub struct PatchDataset {
    pub patches: Vec<Patch>,
    pub label_mode: LabelMode,
    pub num_classes: usize,
    pub class_names: Vec<String>,
}

/// Cuts non-overlapping 32x32 tiles from the centered region of `record`.
///
/// Images of at least 512x512 yield exactly 256 patches; smaller images yield
/// `floor(H/32) * floor(W/32)` patches from a centered, top-left-anchored
/// grid. Images smaller than one patch are an error.
pub fn extract_patches(record: &ImageRecord, mode: LabelMode) -> Result<Vec<Patch>> {
    let shape = record.pixels.shape();
    let (height, width) = (shape[1], shape[2]);
    if height < PATCH_SIZE || width < PATCH_SIZE {
        return Err(Error::TooSmall(format!(
            "image '{}' is {height}x{width}; at least {PATCH_SIZE}x{PATCH_SIZE} required",
            record.image_id
        )));
    }

    let rows = (height.min(MAX_REGION)) / PATCH_SIZE;
    let cols = (width.min(MAX_REGION)) / PATCH_SIZE;
    let off_y = (height - rows * PATCH_SIZE) / 2;
    let off_x = (width - cols * PATCH_SIZE) / 2;

    let label = mode.label_of(record.sensor);
    let data = record.pixels.data();
    let plane = height * width;

    let mut patches = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        for col in 0..cols {
            let y0 = off_y + row * PATCH_SIZE;
            let x0 = off_x + col * PATCH_SIZE;
            let mut pixels = vec![0.0f32; 3 * PATCH_SIZE * PATCH_SIZE];
            for c in 0..3 {
                for y in 0..PATCH_SIZE {
                    let src = c * plane + (y0 + y) * width + x0;
                    let dst = (c * PATCH_SIZE + y) * PATCH_SIZE;
                    pixels[dst..dst + PATCH_SIZE].copy_from_slice(&data[src..src + PATCH_SIZE]);
                }
            }
            patches.push(Patch {
                pixels: Tensor::from_vec(&[3, PATCH_SIZE, PATCH_SIZE], pixels)?,
                label,
                source_image_id: record.image_id.clone(),
            });
        }
    }
    Ok(patches)
}

/// Patches every selected record into one dataset with `num_classes` classes
/// (at most the mode's vocabulary; labels outside the range are an error).
pub fn extract_dataset(
    records: &[ImageRecord],
    indices: &[usize],
    mode: LabelMode,
    num_classes: usize,
) -> Result<PatchDataset> {
    let class_names = mode.class_names(num_classes)?;
    let selected: Vec<&ImageRecord> = indices.iter().map(|&i| &records[i]).collect();
    let per_record = exec::map(&selected, |record| extract_patches(record, mode));

    let mut patches = Vec::new();
    for result in per_record {
        for patch in result? {
            if patch.label >= num_classes {
                return Err(Error::Config(format!(
                    "patch from '{}' has label {} but the experiment uses {num_classes} classes",
                    patch.source_image_id, patch.label
                )));
            }
            patches.push(patch);
        }
    }
    Ok(PatchDataset {
        patches,
        label_mode: mode,
        num_classes,
        class_names,
    })
}

/// Per-channel means over all patches (accumulated in f64, in patch order).
pub fn channel_means(dataset: &PatchDataset) -> [f32; 3] {
    let mut sums = [0.0f64; 3];
    let mut count = 0usize;
    let plane = PATCH_SIZE * PATCH_SIZE;
    for patch in &dataset.patches {
        let data = patch.pixels.data();
        for c in 0..3 {
            sums[c] += data[c * plane..(c + 1) * plane]
                .iter()
                .map(|&v| v as f64)
                .sum::<f64>();
        }
        count += plane;
    }
    if count == 0 {
        return [0.0; 3];
    }
    [
        (sums[0] / count as f64) as f32,
        (sums[1] / count as f64) as f32,
        (sums[2] / count as f64) as f32,
    ]
}

/// Subtracts per-channel `means` in place. Test folds reuse the training-fold
/// means; statistics never leak from test data.
pub fn normalize(dataset: &mut PatchDataset, means: [f32; 3]) {
    let plane = PATCH_SIZE * PATCH_SIZE;
    for patch in &mut dataset.patches {
        let data = patch.pixels.data_mut();
        for c in 0..3 {
            for v in &mut data[c * plane..(c + 1) * plane] {
                *v -= means[c];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::labels::{Device, Sensor};
    use crate::rng::Rng;

    fn record(height: usize, width: usize, seed: u64) -> ImageRecord {
        let mut rng = Rng::new(seed);
        ImageRecord {
            image_id: format!("img_{seed}"),
            pixels: Tensor::<f32>::uniform(&mut rng, &[3, height, width], 0.0, 1.0).unwrap(),
            device: Device::Ip5,
            sensor: Sensor::Ip5Front,
        }
    }

    #[test]
    fn large_image_yields_256_patches() {
        let patches = extract_patches(&record(512, 512, 1), LabelMode::Model).unwrap();
        assert_eq!(patches.len(), 256);
        // Oversized images still cap at the centered 512 region.
        let patches = extract_patches(&record(700, 600, 2), LabelMode::Model).unwrap();
        assert_eq!(patches.len(), 256);
    }

    #[test]
    fn patch_at_32_is_the_whole_image() {
        let rec = record(32, 32, 3);
        let patches = extract_patches(&rec, LabelMode::Sensor).unwrap();
        assert_eq!(patches.len(), 1);
        assert_eq!(patches[0].pixels.data(), rec.pixels.data());
    }

    #[test]
    fn sixty_four_square_yields_four_disjoint_patches() {
        let rec = record(64, 64, 4);
        let patches = extract_patches(&rec, LabelMode::Model).unwrap();
        assert_eq!(patches.len(), 4);
        // Disjoint: every source pixel appears in exactly one patch, so the
        // sum over patches equals the sum over the image.
        let patch_sum: f64 = patches
            .iter()
            .flat_map(|p| p.pixels.data())
            .map(|&v| v as f64)
            .sum();
        let image_sum: f64 = rec.pixels.data().iter().map(|&v| v as f64).sum();
        assert!((patch_sum - image_sum).abs() < 1e-3);
    }

    #[test]
    fn too_small_image_is_rejected() {
        assert!(matches!(
            extract_patches(&record(31, 64, 5), LabelMode::Model),
            Err(Error::TooSmall(_))
        ));
    }

    #[test]
    fn normalize_zeroes_a_constant_dataset() {
        let rec = ImageRecord {
            image_id: "const".into(),
            pixels: Tensor::new(&[3, 64, 64], 0.5f32).unwrap(),
            device: Device::Sg4,
            sensor: Sensor::Sg4Front,
        };
        let mut ds = extract_dataset(&[rec], &[0], LabelMode::Model, 3).unwrap();
        let means = channel_means(&ds);
        assert_eq!(means, [0.5, 0.5, 0.5]);
        normalize(&mut ds, means);
        assert!(ds
            .patches
            .iter()
            .all(|p| p.pixels.data().iter().all(|&v| v == 0.0)));
        // Re-computing means after normalization gives ~0.
        let again = channel_means(&ds);
        assert!(again.iter().all(|m| m.abs() < 1e-7));
    }

    #[test]
    fn train_means_applied_to_test_leave_test_mean_nonzero() {
        let train = ImageRecord {
            image_id: "train".into(),
            pixels: Tensor::new(&[3, 32, 32], 0.25f32).unwrap(),
            device: Device::Ip5,
            sensor: Sensor::Ip5Front,
        };
        let test = ImageRecord {
            image_id: "test".into(),
            pixels: Tensor::new(&[3, 32, 32], 0.75f32).unwrap(),
            device: Device::Ip5,
            sensor: Sensor::Ip5Front,
        };
        let train_ds = extract_dataset(&[train], &[0], LabelMode::Model, 3).unwrap();
        let mut test_ds = extract_dataset(&[test], &[0], LabelMode::Model, 3).unwrap();
        let means = channel_means(&train_ds);
        normalize(&mut test_ds, means);
        let test_mean = channel_means(&test_ds);
        assert!(test_mean.iter().all(|&m| (m - 0.5).abs() < 1e-6));
    }

    #[test]
    fn labels_outside_num_classes_are_rejected() {
        let rec = ImageRecord {
            image_id: "sgt2".into(),
            pixels: Tensor::new(&[3, 32, 32], 0.5f32).unwrap(),
            device: Device::Sgt2,
            sensor: Sensor::Sgt2Front,
        };
        // Sensor label 4 does not fit in a 4-class experiment.
        assert!(matches!(
            extract_dataset(&[rec], &[0], LabelMode::Sensor, 4),
            Err(Error::Config(_))
        ));
    }
}
