//! Round log (JSON lines, one record per widening round) and the final run
//! report. Primary artifacts carry no timestamps so identical runs produce
//! byte-identical files; wall-clock info goes to a separate `run_meta.json`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use mtmv_core::widening::{DeepMtmvOutcome, RoundRecord};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RoundLine {
    pub round: usize,
    pub depth: usize,
    pub chosen_d: usize,
    pub loss_table: Vec<LossRow>,
    pub assignment: Vec<usize>,
    pub partition: Vec<Vec<usize>>,
    pub view_weights: ViewWeightsField,
    pub metrics: MetricsField,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LossRow {
    pub d: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ViewWeightsField {
    pub raw: Vec<f64>,
    pub shares: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MetricsField {
    pub loss_trajectory: Vec<f64>,
    pub task_accuracy: Vec<f64>,
}

impl From<&RoundRecord> for RoundLine {
    fn from(r: &RoundRecord) -> Self {
        RoundLine {
            round: r.round,
            depth: r.depth,
            chosen_d: r.chosen_d,
            loss_table: r.candidates.iter().map(|&(d, loss)| LossRow { d, loss }).collect(),
            assignment: r.assignment.clone(),
            partition: r.partition.clone(),
            view_weights: ViewWeightsField {
                raw: r.view_weights_raw.clone(),
                shares: r.view_shares.clone(),
            },
            metrics: MetricsField {
                loss_trajectory: r.metrics.loss_trajectory.clone(),
                task_accuracy: r.metrics.task_accuracy.clone(),
            },
        }
    }
}

/// Writes one JSON object per round, newline-delimited.
pub fn write_round_log(rounds: &[RoundRecord], path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    for record in rounds {
        let line = RoundLine::from(record);
        serde_json::to_writer(&mut file, &line)?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_round_log(path: &Path) -> Result<Vec<RoundLine>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub rounds_run: usize,
    pub final_metrics: FinalMetricsField,
    pub view_weights: ViewWeightsField,
    pub architecture: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FinalMetricsField {
    pub per_task_accuracy: Vec<f64>,
    pub per_task_f1: Vec<f64>,
    pub macro_f1: f64,
    pub mean_accuracy: f64,
    pub final_val_loss: f64,
    pub convergence_epochs: usize,
}

pub fn build_report(outcome: &DeepMtmvOutcome, seed: u64) -> RunReport {
    let weights = outcome.model.view_weights();
    RunReport {
        format: "mtmv-run-report".to_string(),
        version: 1,
        seed,
        rounds_run: outcome.rounds.len(),
        final_metrics: FinalMetricsField {
            per_task_accuracy: outcome.final_metrics.report.per_task_accuracy.clone(),
            per_task_f1: outcome.final_metrics.report.per_task_f1.clone(),
            macro_f1: outcome.final_metrics.report.macro_f1,
            mean_accuracy: outcome.final_metrics.report.mean_accuracy,
            final_val_loss: outcome.final_metrics.final_val_loss,
            convergence_epochs: outcome.final_metrics.epochs,
        },
        view_weights: ViewWeightsField { raw: weights.raw, shares: weights.shares },
        architecture: crate::model_io::ARCH_FILE.to_string(),
    }
}

pub fn write_report(report: &RunReport, path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(report)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
