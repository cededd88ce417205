//! `scinet synth`: write a synthetic camera dataset to disk.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use scinet_core::data::{
    generate_synthetic, make_camera_specs, write_manifest, Sensor, SynthParams,
};
use scinet_core::rng::Rng;
use scinet_core::tensor::Tensor;
use scinet_core::{Error, Result};

use crate::context::{OutDir, RunManifest};
use crate::SynthArgs;

/// Sidecar describing how the dataset was generated.
#[derive(Serialize)]
struct SynthSidecar {
    params: SynthParams,
    classes: Vec<SidecarClass>,
}

#[derive(Serialize)]
struct SidecarClass {
    sensor: Sensor,
    correlation_group: Option<usize>,
}

fn to_rgb8(pixels: &Tensor<f32>) -> image::RgbImage {
    let shape = pixels.shape();
    let (height, width) = (shape[1], shape[2]);
    let plane = height * width;
    let data = pixels.data();
    let mut img = image::RgbImage::new(width as u32, height as u32);
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            let px = [
                (data[i] * 255.0).round() as u8,
                (data[plane + i] * 255.0).round() as u8,
                (data[2 * plane + i] * 255.0).round() as u8,
            ];
            img.put_pixel(x as u32, y as u32, image::Rgb(px));
        }
    }
    img
}

pub fn run(args: SynthArgs) -> Result<()> {
    let started = Instant::now();
    let params = SynthParams {
        classes: args.classes,
        images_per_class: args.per_class,
        image_size: args.size,
        sigma_fingerprint: args.sigma_f,
        sigma_readout: args.sigma_r,
        correlated: args.correlated,
        delta_fraction: args.delta_fraction,
        seed: args.seed,
    };
    params.validate()?;

    let out = OutDir::claim(&args.out)?;
    std::fs::create_dir_all(out.file("images"))?;

    let mut rng = Rng::new(params.seed);
    let specs = make_camera_specs(&params, &mut rng)?;
    let records = generate_synthetic(&specs, params.images_per_class, params.image_size, &mut rng)?;

    let mut manifest_rows = Vec::with_capacity(records.len());
    for record in &records {
        let rel = format!("images/{}.png", record.image_id);
        to_rgb8(&record.pixels)
            .save(out.file(&rel))
            .map_err(|e| Error::Ingest {
                path: out.file(&rel),
                message: format!("cannot write image: {e}"),
            })?;
        manifest_rows.push((rel, record.device, record.sensor));
    }
    write_manifest(&out.file("manifest.csv"), &manifest_rows)?;

    let sidecar = SynthSidecar {
        params: params.clone(),
        classes: specs
            .iter()
            .map(|s| SidecarClass {
                sensor: s.sensor,
                correlation_group: s.correlation_group,
            })
            .collect(),
    };
    std::fs::write(
        out.file("synth_spec.json"),
        serde_json::to_string_pretty(&sidecar)
            .map_err(|e| Error::Config(format!("sidecar serialization failed: {e}")))?,
    )?;

    RunManifest {
        command: "synth".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: params.seed,
        resolved_config: serde_json::to_value(&params)
            .map_err(|e| Error::Config(format!("params serialization failed: {e}")))?,
        input_hashes: BTreeMap::new(),
        outputs: vec![
            "images/".into(),
            "manifest.csv".into(),
            "synth_spec.json".into(),
        ],
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    }
    .write(&out)?;

    println!(
        "wrote {} images ({} classes x {}) to {}",
        records.len(),
        params.classes,
        params.images_per_class,
        out.path().display()
    );
    Ok(())
}
