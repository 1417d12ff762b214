//! Training hyperparameters.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::nets::LayerKind;

/// Convergence criterion for the final training phase: stop once the
/// validation loss has improved by less than `min_delta` for `patience`
/// consecutive epochs, or after `max_epochs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    pub min_delta: f64,
    pub patience: usize,
    pub max_epochs: usize,
}

impl Default for Convergence {
    fn default() -> Self {
        Convergence { min_delta: 1e-4, patience: 10, max_epochs: 300 }
    }
}

/// Every knob of a training run. `seed` has no default: runs are always
/// seeded.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Dataset directory (interpreted by the CLI layer).
    pub dataset: Option<String>,
    pub seed: u64,
    /// Widening rounds `R`; 0 trains the unsplit model only.
    pub rounds: usize,
    /// Separation penalty weight in the split loss.
    pub alpha: f64,
    /// Structural cost of one extra branch in the split loss.
    pub l0: f64,
    /// Overrides the per-depth exponent `p_t`; by default the depth index is
    /// used (output layer = 0).
    pub p_t_override: Option<u32>,
    /// Scales normalized view shares into co-regularization weights.
    pub lambda_scale: f64,
    /// Per-view regularizer weights for the training objective. Empty means
    /// all zeros; a single entry broadcasts to every view.
    pub view_reg: Vec<f64>,
    pub learning_rate: f64,
    pub epochs_per_round: usize,
    /// 0 = full-batch steps (one update per epoch).
    pub batch_size: usize,
    pub convergence: Convergence,
    /// Inclusive candidate branch-count range; `None` means `1..=min(c, 5)`.
    pub d_range: Option<(usize, usize)>,
    pub cross_stitch: bool,
    /// Per-view layer plans; `None` derives defaults from view modalities.
    pub view_plans: Option<Vec<Vec<LayerKind>>>,
}

impl TrainConfig {
    /// A config with documented defaults and the given seed.
    pub fn with_seed(seed: u64) -> Self {
        TrainConfig {
            dataset: None,
            seed,
            rounds: 2,
            alpha: 1.0,
            l0: 0.01,
            p_t_override: None,
            lambda_scale: 0.5,
            view_reg: Vec::new(),
            learning_rate: 0.1,
            epochs_per_round: 60,
            batch_size: 16,
            convergence: Convergence::default(),
            d_range: None,
            cross_stitch: false,
            view_plans: None,
        }
    }

    /// Rejects out-of-range values, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 {
            return Err(Error::Config(format!("alpha must be nonnegative, got {}", self.alpha)));
        }
        if self.l0 < 0.0 {
            return Err(Error::Config(format!("l0 must be nonnegative, got {}", self.l0)));
        }
        if self.lambda_scale < 0.0 {
            return Err(Error::Config(format!(
                "lambda_scale must be nonnegative, got {}",
                self.lambda_scale
            )));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        for (i, &l) in self.view_reg.iter().enumerate() {
            if l < 0.0 {
                return Err(Error::Config(format!("view_reg[{i}] must be nonnegative, got {l}")));
            }
        }
        if let Some((lo, hi)) = self.d_range {
            if lo < 1 || lo > hi {
                return Err(Error::Config(format!("d_range ({lo}, {hi}) is empty or starts below 1")));
            }
        }
        if self.convergence.min_delta < 0.0 {
            return Err(Error::Config(format!(
                "convergence.min_delta must be nonnegative, got {}",
                self.convergence.min_delta
            )));
        }
        if self.convergence.patience == 0 {
            return Err(Error::Config(String::from("convergence.patience must be at least 1")));
        }
        Ok(())
    }

    /// Per-view regularizer weights resolved against the view count.
    pub fn resolved_view_reg(&self, views: usize) -> Result<Vec<f64>> {
        match self.view_reg.len() {
            0 => Ok(vec![0.0; views]),
            1 => Ok(vec![self.view_reg[0]; views]),
            n if n == views => Ok(self.view_reg.clone()),
            n => Err(Error::Config(format!("view_reg has {n} entries for {views} views"))),
        }
    }
}
