//! JSON configuration files: training config and dataset-generation specs.
//!
//! Unknown keys are rejected. Every omitted key falls back to a documented
//! default except `seed`, which is required.

use std::path::Path;

use serde::{Deserialize, Serialize};

use mtmv_core::config::{Convergence, TrainConfig};
use mtmv_core::datagen::PlantedSpec;
use mtmv_core::nets::{LayerKind, Modality};
use mtmv_core::tape::Activation;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum ModalityField {
    Vector,
    Image2d,
    Sequence1d,
}

impl From<ModalityField> for Modality {
    fn from(m: ModalityField) -> Self {
        match m {
            ModalityField::Vector => Modality::Vector,
            ModalityField::Image2d => Modality::Image2d,
            ModalityField::Sequence1d => Modality::Sequence1d,
        }
    }
}

impl From<Modality> for ModalityField {
    fn from(m: Modality) -> Self {
        match m {
            Modality::Vector => ModalityField::Vector,
            Modality::Image2d => ModalityField::Image2d,
            Modality::Sequence1d => ModalityField::Sequence1d,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum ActivationField {
    Relu,
    Sigmoid,
    Identity,
}

impl From<ActivationField> for Activation {
    fn from(a: ActivationField) -> Self {
        match a {
            ActivationField::Relu => Activation::Relu,
            ActivationField::Sigmoid => Activation::Sigmoid,
            ActivationField::Identity => Activation::Identity,
        }
    }
}

impl From<Activation> for ActivationField {
    fn from(a: Activation) -> Self {
        match a {
            Activation::Relu => ActivationField::Relu,
            Activation::Sigmoid => ActivationField::Sigmoid,
            Activation::Identity => ActivationField::Identity,
        }
    }
}

fn default_activation() -> ActivationField {
    ActivationField::Relu
}

fn default_stride() -> usize {
    1
}

/// One layer-plan entry; `kind` selects the variant.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LayerField {
    Dense {
        width: usize,
        #[serde(default = "default_activation")]
        activation: ActivationField,
    },
    Conv2d {
        filters: usize,
        kh: usize,
        kw: usize,
        #[serde(default = "default_stride")]
        stride: usize,
        #[serde(default = "default_activation")]
        activation: ActivationField,
    },
    Conv1d {
        filters: usize,
        ks: usize,
        #[serde(default = "default_activation")]
        activation: ActivationField,
    },
    Flatten,
}

impl From<LayerField> for LayerKind {
    fn from(l: LayerField) -> Self {
        match l {
            LayerField::Dense { width, activation } => {
                LayerKind::Dense { width, activation: activation.into() }
            }
            LayerField::Conv2d { filters, kh, kw, stride, activation } => {
                LayerKind::Conv2d { filters, kh, kw, stride, activation: activation.into() }
            }
            LayerField::Conv1d { filters, ks, activation } => {
                LayerKind::Conv1d { filters, ks, activation: activation.into() }
            }
            LayerField::Flatten => LayerKind::Flatten,
        }
    }
}

impl From<LayerKind> for LayerField {
    fn from(l: LayerKind) -> Self {
        match l {
            LayerKind::Dense { width, activation } => {
                LayerField::Dense { width, activation: activation.into() }
            }
            LayerKind::Conv2d { filters, kh, kw, stride, activation } => {
                LayerField::Conv2d { filters, kh, kw, stride, activation: activation.into() }
            }
            LayerKind::Conv1d { filters, ks, activation } => {
                LayerField::Conv1d { filters, ks, activation: activation.into() }
            }
            LayerKind::Flatten => LayerField::Flatten,
        }
    }
}

/// Scalar-or-list form of the per-view regularizer weights.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ViewReg {
    Scalar(f64),
    PerView(Vec<f64>),
}

impl ViewReg {
    fn into_vec(self) -> Vec<f64> {
        match self {
            ViewReg::Scalar(v) => vec![v],
            ViewReg::PerView(v) => v,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceFile {
    #[serde(default = "default_min_delta")]
    pub min_delta: f64,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
}

fn default_min_delta() -> f64 {
    1e-4
}
fn default_patience() -> usize {
    10
}
fn default_max_epochs() -> usize {
    300
}

impl Default for ConvergenceFile {
    fn default() -> Self {
        ConvergenceFile {
            min_delta: default_min_delta(),
            patience: default_patience(),
            max_epochs: default_max_epochs(),
        }
    }
}

fn default_rounds() -> usize {
    2
}
fn default_alpha() -> f64 {
    1.0
}
fn default_l0() -> f64 {
    0.01
}
fn default_lambda_scale() -> f64 {
    0.5
}
fn default_learning_rate() -> f64 {
    0.1
}
fn default_epochs_per_round() -> usize {
    60
}
fn default_batch_size() -> usize {
    16
}

/// On-disk schema of a training config.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub dataset: Option<String>,
    pub seed: u64,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_l0")]
    pub l0: f64,
    #[serde(default)]
    pub p_t_override: Option<u32>,
    #[serde(default = "default_lambda_scale")]
    pub lambda_scale: f64,
    #[serde(default)]
    pub view_reg: Option<ViewReg>,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs_per_round")]
    pub epochs_per_round: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub convergence: ConvergenceFile,
    #[serde(default)]
    pub d_range: Option<(usize, usize)>,
    #[serde(default)]
    pub cross_stitch: bool,
    #[serde(default)]
    pub view_plans: Option<Vec<Vec<LayerField>>>,
}

impl From<ConfigFile> for TrainConfig {
    fn from(f: ConfigFile) -> Self {
        TrainConfig {
            dataset: f.dataset,
            seed: f.seed,
            rounds: f.rounds,
            alpha: f.alpha,
            l0: f.l0,
            p_t_override: f.p_t_override,
            lambda_scale: f.lambda_scale,
            view_reg: f.view_reg.map(ViewReg::into_vec).unwrap_or_default(),
            learning_rate: f.learning_rate,
            epochs_per_round: f.epochs_per_round,
            batch_size: f.batch_size,
            convergence: Convergence {
                min_delta: f.convergence.min_delta,
                patience: f.convergence.patience,
                max_epochs: f.convergence.max_epochs,
            },
            d_range: f.d_range,
            cross_stitch: f.cross_stitch,
            view_plans: f
                .view_plans
                .map(|plans| plans.into_iter().map(|p| p.into_iter().map(Into::into).collect()).collect()),
        }
    }
}

impl From<&TrainConfig> for ConfigFile {
    fn from(c: &TrainConfig) -> Self {
        ConfigFile {
            dataset: c.dataset.clone(),
            seed: c.seed,
            rounds: c.rounds,
            alpha: c.alpha,
            l0: c.l0,
            p_t_override: c.p_t_override,
            lambda_scale: c.lambda_scale,
            view_reg: if c.view_reg.is_empty() {
                None
            } else {
                Some(ViewReg::PerView(c.view_reg.clone()))
            },
            learning_rate: c.learning_rate,
            epochs_per_round: c.epochs_per_round,
            batch_size: c.batch_size,
            convergence: ConvergenceFile {
                min_delta: c.convergence.min_delta,
                patience: c.convergence.patience,
                max_epochs: c.convergence.max_epochs,
            },
            d_range: c.d_range,
            cross_stitch: c.cross_stitch,
            view_plans: c
                .view_plans
                .clone()
                .map(|plans| plans.into_iter().map(|p| p.into_iter().map(Into::into).collect()).collect()),
        }
    }
}

/// Parses and validates a training config file.
pub fn parse_config(path: &Path) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    parse_config_str(&text).map_err(|e| match e {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_config_str(text: &str) -> Result<TrainConfig> {
    let file: ConfigFile =
        serde_json::from_str(text).map_err(|e| CliError::Data(format!("config: {e}")))?;
    let cfg: TrainConfig = file.into();
    cfg.validate()?;
    Ok(cfg)
}

/// Serializes a config so that parsing it back yields an equal config.
pub fn serialize_config(cfg: &TrainConfig) -> String {
    serde_json::to_string_pretty(&ConfigFile::from(cfg)).expect("config serializes")
}

/// On-disk schema of a dataset-generation spec.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GenSpecFile {
    pub seed: u64,
    pub task_groups: Vec<Vec<usize>>,
    pub views: Vec<GenViewField>,
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default = "default_label_noise")]
    pub label_noise: f64,
    pub n_per_task: usize,
}

fn default_noise() -> f64 {
    0.4
}
fn default_label_noise() -> f64 {
    0.15
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GenViewField {
    pub modality: ModalityField,
    pub dims: Vec<usize>,
    #[serde(default = "default_signal")]
    pub signal: f64,
}

fn default_signal() -> f64 {
    1.0
}

/// Parses a generation spec into the planted recipe plus view shapes.
pub fn parse_gen_spec(path: &Path) -> Result<(PlantedSpec, usize, Vec<(Modality, Vec<usize>)>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let file: GenSpecFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let spec = PlantedSpec {
        task_groups: file.task_groups,
        signal: file.views.iter().map(|v| v.signal).collect(),
        noise: file.noise,
        label_noise: file.label_noise,
        seed: file.seed,
    };
    let dims = file
        .views
        .into_iter()
        .map(|v| (v.modality.into(), v.dims))
        .collect();
    Ok((spec, file.n_per_task, dims))
}
