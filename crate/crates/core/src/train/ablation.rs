//! Controlled configuration sweeps: conv depth, activation kind, dropout
//! keep-probability. All variants run with the same seed and data so the
//! fold assignment is identical and differences isolate the swept factor.

use serde::{Deserialize, Serialize};

use crate::data::{ImageRecord, LabelMode};
use crate::error::{Error, Result};
use crate::layers::Activation;
use crate::model::ArchitectureConfig;
use crate::train::cv::{cross_validate, CvOptions};
use crate::train::report::ExperimentReport;
use crate::train::TrainConfig;

/// Conv depths compared by the topology sweep.
pub const TOPOLOGY_DEPTHS: [usize; 3] = [1, 2, 4];
/// Keep-probabilities compared by the dropout sweep.
pub const DROPOUT_KEEP_PROBS: [f64; 4] = [0.35, 0.45, 0.5, 0.55];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Topology,
    Activation,
    Dropout,
}

impl SweepKind {
    pub fn parse(s: &str) -> Result<SweepKind> {
        match s {
            "topology" => Ok(SweepKind::Topology),
            "activation" => Ok(SweepKind::Activation),
            "dropout" => Ok(SweepKind::Dropout),
            other => Err(Error::Config(format!(
                "unknown sweep '{other}' (expected topology, activation or dropout)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepKind::Topology => "topology",
            SweepKind::Activation => "activation",
            SweepKind::Dropout => "dropout",
        }
    }
}

/// Result of one sweep variant; an unbuildable variant records its error and
/// the sweep continues.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AblationOutcome {
    pub variant: String,
    pub report: Option<ExperimentReport>,
    pub error: Option<String>,
}

fn variants(sweep: SweepKind, base: &ArchitectureConfig) -> Result<Vec<(String, ArchitectureConfig)>> {
    match sweep {
        SweepKind::Topology => TOPOLOGY_DEPTHS
            .iter()
            .map(|&depth| {
                let mut cfg = base.clone();
                cfg.filters_per_conv = ArchitectureConfig::default_filters_for_depth(depth)?;
                Ok((format!("depth_{depth}"), cfg))
            })
            .collect(),
        SweepKind::Activation => {
            let alpha = match base.activation {
                Activation::LeakyRelu { alpha } => alpha,
                Activation::Relu => 0.01,
            };
            let mut relu = base.clone();
            relu.activation = Activation::Relu;
            let mut leaky = base.clone();
            leaky.activation = Activation::LeakyRelu { alpha };
            Ok(vec![
                ("relu".to_string(), relu),
                ("leaky_relu".to_string(), leaky),
            ])
        }
        SweepKind::Dropout => Ok(DROPOUT_KEEP_PROBS
            .iter()
            .map(|&p| {
                let mut cfg = base.clone();
                cfg.dropout_keep = p;
                (format!("keep_{p}"), cfg)
            })
            .collect()),
    }
}

/// Runs every variant of `sweep` over the same records, seed and options.
pub fn run_ablation(
    sweep: SweepKind,
    records: &[ImageRecord],
    mode: LabelMode,
    base_arch: &ArchitectureConfig,
    train_cfg: &TrainConfig,
    opts: &CvOptions,
) -> Result<Vec<AblationOutcome>> {
    let variants = variants(sweep, base_arch)?;
    let mut outcomes = Vec::with_capacity(variants.len());
    for (name, arch) in variants {
        match cross_validate(records, mode, &arch, train_cfg, opts) {
            Ok(outcome) => outcomes.push(AblationOutcome {
                variant: name,
                report: Some(outcome.report),
                error: None,
            }),
            Err(e) => {
                log::warn!("variant '{name}' failed: {e}; continuing sweep");
                outcomes.push(AblationOutcome {
                    variant: name,
                    report: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    Ok(outcomes)
}

/// Summary table: one `variant,mean_accuracy` row per outcome.
pub fn ablation_summary_csv(outcomes: &[AblationOutcome]) -> String {
    let mut out = String::from("variant,mean_accuracy\n");
    for outcome in outcomes {
        match &outcome.report {
            Some(report) => out.push_str(&format!("{},{}\n", outcome.variant, report.mean_accuracy)),
            None => out.push_str(&format!("{},error\n", outcome.variant)),
        }
    }
    out
}
