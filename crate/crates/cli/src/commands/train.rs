//! `scinet train`: cross-validated training run producing per-fold
//! checkpoints, per-fold test manifests, a report and a run manifest.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use scinet_core::data::{load_manifest, write_manifest, LabelMode, ManifestOptions};
use scinet_core::model::save_checkpoint;
use scinet_core::train::{cross_validate, CvOptions, DataProvenance};
use scinet_core::Result;

use crate::context::{config_json, file_hash, resolve_configs, OutDir, RunManifest};
use crate::{TrainArgs, VoteArg};

pub fn run(args: TrainArgs) -> Result<()> {
    let started = Instant::now();
    let mode: LabelMode = args.mode.into();
    let (arch, train_cfg) = resolve_configs(
        mode,
        args.config.as_deref(),
        args.seed,
        args.epochs,
    )?;

    let manifest_hash = file_hash(&args.manifest)?;
    let records = load_manifest(
        &args.manifest,
        &ManifestOptions {
            allow_jpeg: args.allow_jpeg,
        },
    )?;

    let out = OutDir::claim(&args.out)?;
    let opts = CvOptions {
        folds: args.folds,
        rounds: if args.holdout { Some(1) } else { None },
        image_vote: args.vote == VoteArg::Image,
        provenance: DataProvenance {
            source: args.manifest.display().to_string(),
            images: records.len(),
            content_hash: Some(manifest_hash.clone()),
        },
    };

    let outcome = cross_validate(&records, mode, &arch, &train_cfg, &opts)?;

    // Per-fold checkpoints plus a manifest of each fold's test images, so a
    // later `eval` can reproduce the fold accuracy exactly.
    let manifest_dir = args.manifest.parent().unwrap_or_else(|| Path::new("."));
    let by_id: BTreeMap<&str, (scinet_core::data::Device, scinet_core::data::Sensor)> = records
        .iter()
        .map(|r| (r.image_id.as_str(), (r.device, r.sensor)))
        .collect();
    let mut outputs = Vec::new();
    for fm in &outcome.fold_models {
        let ckpt = format!("fold_{:02}.ckpt", fm.fold);
        save_checkpoint(&fm.network, fm.channel_means, &out.file(&ckpt))?;
        outputs.push(ckpt);

        let rows: Vec<_> = fm
            .test_image_ids
            .iter()
            .map(|id| {
                let (device, sensor) = by_id[id.as_str()];
                let absolute = if Path::new(id).is_absolute() {
                    id.clone()
                } else {
                    manifest_dir.join(id).display().to_string()
                };
                (absolute, device, sensor)
            })
            .collect();
        let fold_manifest = format!("fold_{:02}_test.csv", fm.fold);
        write_manifest(&out.file(&fold_manifest), &rows)?;
        outputs.push(fold_manifest);
    }

    std::fs::write(out.file("report.json"), outcome.report.to_json_pretty())?;
    std::fs::write(
        out.file("confusion_matrix.csv"),
        outcome
            .report
            .confusion_matrix
            .to_csv(&outcome.report.class_names),
    )?;
    outputs.push("report.json".into());
    outputs.push("confusion_matrix.csv".into());

    RunManifest {
        command: "train".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: train_cfg.seed,
        resolved_config: config_json(&arch, &train_cfg),
        input_hashes: BTreeMap::from([(args.manifest.display().to_string(), manifest_hash)]),
        outputs,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    }
    .write(&out)?;

    println!(
        "mean accuracy {:.4} over {} round(s); report at {}",
        outcome.report.mean_accuracy,
        outcome.report.rounds,
        out.file("report.json").display()
    );
    if let Some(vote) = outcome.report.image_vote_accuracy {
        println!("image majority-vote accuracy {vote:.4}");
    }
    Ok(())
}
