//! Dataset ingestion, the patch pipeline with image-level split hygiene, and
//! the synthetic camera simulator.

pub mod labels;
pub mod manifest;
pub mod patch;
pub mod split;
pub mod synth;

pub use labels::{Device, LabelMode, Sensor};
pub use manifest::{load_manifest, write_manifest, ImageRecord, ManifestOptions, MANIFEST_HEADER};
pub use patch::{channel_means, extract_dataset, extract_patches, normalize, Patch, PatchDataset, MAX_REGION, PATCH_SIZE};
pub use split::{split_by_image, FoldAssignment};
pub use synth::{generate_dataset, generate_synthetic, make_camera_specs, SynthParams, SyntheticCameraSpec};
