//! Binary classification metrics at a fixed 0.5 threshold.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Confusion counts for one task.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn count(predictions: &[f64], labels: &[f64]) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} predictions vs {} labels",
                predictions.len(),
                labels.len()
            )));
        }
        let mut c = Confusion::default();
        for (&p, &l) in predictions.iter().zip(labels) {
            if l != 0.0 && l != 1.0 {
                return Err(Error::Validation(format!("label {l} is not binary")));
            }
            let hat = p >= 0.5;
            match (hat, l == 1.0) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.tp + self.tn + self.fp + self.fn_;
        if total == 0 {
            return 0.0;
        }
        (self.tp + self.tn) as f64 / total as f64
    }

    /// `2 tp / (2 tp + fp + fn)`, defined as 0 when the denominator is 0.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            return 0.0;
        }
        2.0 * self.tp as f64 / denom as f64
    }
}

/// Per-task accuracy and F1 plus their unweighted aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub per_task_accuracy: Vec<f64>,
    pub per_task_f1: Vec<f64>,
    pub macro_f1: f64,
    pub mean_accuracy: f64,
}

/// Computes metrics for each `(predictions, labels)` pair, one per task.
pub fn compute_metrics(tasks: &[(&[f64], &[f64])]) -> Result<MetricsReport> {
    if tasks.is_empty() {
        return Err(Error::Validation(String::from("no tasks to score")));
    }
    let mut per_task_accuracy = Vec::with_capacity(tasks.len());
    let mut per_task_f1 = Vec::with_capacity(tasks.len());
    for &(preds, labels) in tasks {
        let c = Confusion::count(preds, labels)?;
        per_task_accuracy.push(c.accuracy());
        per_task_f1.push(c.f1());
    }
    let macro_f1 = per_task_f1.iter().sum::<f64>() / per_task_f1.len() as f64;
    let mean_accuracy = per_task_accuracy.iter().sum::<f64>() / per_task_accuracy.len() as f64;
    Ok(MetricsReport { per_task_accuracy, per_task_f1, macro_f1, mean_accuracy })
}
