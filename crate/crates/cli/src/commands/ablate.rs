//! `scinet ablate`: run one configuration sweep, write per-variant reports
//! and a summary table suitable for plotting.

use std::collections::BTreeMap;
use std::time::Instant;

use scinet_core::data::{load_manifest, LabelMode, ManifestOptions};
use scinet_core::train::{ablation_summary_csv, run_ablation, CvOptions, DataProvenance, SweepKind};
use scinet_core::Result;

use crate::context::{config_json, file_hash, resolve_configs, OutDir, RunManifest};
use crate::AblateArgs;

pub fn run(args: AblateArgs) -> Result<()> {
    let started = Instant::now();
    let mode: LabelMode = args.mode.into();
    let sweep: SweepKind = args.sweep.into();
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
        image_vote: false,
        provenance: DataProvenance {
            source: args.manifest.display().to_string(),
            images: records.len(),
            content_hash: Some(manifest_hash.clone()),
        },
    };

    let outcomes = run_ablation(sweep, &records, mode, &arch, &train_cfg, &opts)?;

    let mut outputs = Vec::new();
    for outcome in &outcomes {
        match &outcome.report {
            Some(report) => {
                let name = format!("report_{}.json", outcome.variant);
                std::fs::write(out.file(&name), report.to_json_pretty())?;
                outputs.push(name);
            }
            None => {
                let name = format!("error_{}.txt", outcome.variant);
                std::fs::write(
                    out.file(&name),
                    outcome.error.clone().unwrap_or_else(|| "unknown error".into()),
                )?;
                outputs.push(name);
            }
        }
    }

    let summary = ablation_summary_csv(&outcomes);
    std::fs::write(out.file("summary.csv"), &summary)?;
    outputs.push("summary.csv".into());

    RunManifest {
        command: "ablate".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: train_cfg.seed,
        resolved_config: serde_json::json!({
            "sweep": sweep,
            "base": config_json(&arch, &train_cfg),
        }),
        input_hashes: BTreeMap::from([(args.manifest.display().to_string(), manifest_hash)]),
        outputs,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    }
    .write(&out)?;

    print!("{summary}");
    Ok(())
}
