//! Dataset directory layout: a JSON manifest plus one binary tensor file per
//! (task, view) and per task's labels.
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/task<j>/view<i>.mtmv     features, [n, dims...]
//! <dir>/task<j>/labels.mtmv      labels, [n]
//! ```
//!
//! Split tags live in the manifest as `"train" | "valid" | "test"` strings.
//! Round-trips are bit-exact.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mtmv_core::datagen::{MultiViewDataset, Split, TaskData, ViewMeta};
use mtmv_core::Tensor;

use crate::config_io::ModalityField;
use crate::error::{CliError, Result};
use crate::tensor_io::{read_tensor, write_tensor};

pub const MANIFEST_NAME: &str = "manifest.json";
const FORMAT: &str = "mtmv-dataset";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    version: u32,
    views: Vec<ViewEntry>,
    tasks: Vec<TaskEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ViewEntry {
    id: usize,
    modality: ModalityField,
    dims: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskEntry {
    id: usize,
    examples: usize,
    features: Vec<String>,
    labels: String,
    splits: Vec<SplitField>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum SplitField {
    Train,
    Valid,
    Test,
}

impl From<Split> for SplitField {
    fn from(s: Split) -> Self {
        match s {
            Split::Train => SplitField::Train,
            Split::Valid => SplitField::Valid,
            Split::Test => SplitField::Test,
        }
    }
}

impl From<SplitField> for Split {
    fn from(s: SplitField) -> Self {
        match s {
            SplitField::Train => Split::Train,
            SplitField::Valid => Split::Valid,
            SplitField::Test => Split::Test,
        }
    }
}

/// Writes the dataset under `dir` and returns the manifest path.
pub fn save_dataset(ds: &MultiViewDataset, dir: &Path) -> Result<PathBuf> {
    ds.validate()?;
    std::fs::create_dir_all(dir)?;
    let mut tasks = Vec::with_capacity(ds.tasks.len());
    for (j, task) in ds.tasks.iter().enumerate() {
        let task_dir = dir.join(format!("task{j}"));
        std::fs::create_dir_all(&task_dir)?;
        let mut features = Vec::with_capacity(task.features.len());
        for (i, feat) in task.features.iter().enumerate() {
            let rel = format!("task{j}/view{i}.mtmv");
            write_tensor(&dir.join(&rel), feat)?;
            features.push(rel);
        }
        let labels_rel = format!("task{j}/labels.mtmv");
        let labels = Tensor::new(vec![task.labels.len()], task.labels.clone())
            .map_err(CliError::from)?;
        write_tensor(&dir.join(&labels_rel), &labels)?;
        tasks.push(TaskEntry {
            id: j,
            examples: task.labels.len(),
            features,
            labels: labels_rel,
            splits: task.splits.iter().map(|&s| s.into()).collect(),
        });
    }
    let manifest = Manifest {
        format: FORMAT.to_string(),
        version: VERSION,
        views: ds
            .views
            .iter()
            .enumerate()
            .map(|(i, v)| ViewEntry { id: i, modality: v.modality.into(), dims: v.dims.clone() })
            .collect(),
        tasks,
    };
    let manifest_path = dir.join(MANIFEST_NAME);
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest_path)
}

/// Loads a dataset directory, verifying shapes against the manifest.
pub fn load_dataset(dir: &Path) -> Result<MultiViewDataset> {
    let manifest_path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| CliError::Data(format!("{}: {e}", manifest_path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", manifest_path.display())))?;
    if manifest.format != FORMAT {
        return Err(CliError::Data(format!(
            "{}: format `{}`, expected `{FORMAT}`",
            manifest_path.display(),
            manifest.format
        )));
    }
    if manifest.version != VERSION {
        return Err(CliError::Data(format!(
            "{}: version {}, expected {VERSION}",
            manifest_path.display(),
            manifest.version
        )));
    }
    for (i, v) in manifest.views.iter().enumerate() {
        if v.id != i {
            return Err(CliError::Data(format!(
                "{}: view ids must be 0..n in order",
                manifest_path.display()
            )));
        }
    }
    let views: Vec<ViewMeta> = manifest
        .views
        .iter()
        .map(|v| ViewMeta { modality: v.modality.clone().into(), dims: v.dims.clone() })
        .collect();

    let mut tasks = Vec::with_capacity(manifest.tasks.len());
    for entry in &manifest.tasks {
        if entry.features.len() != views.len() {
            return Err(CliError::Data(format!(
                "task {}: {} feature files for {} views",
                entry.id,
                entry.features.len(),
                views.len()
            )));
        }
        let mut features = Vec::with_capacity(entry.features.len());
        for (i, rel) in entry.features.iter().enumerate() {
            let tensor = read_tensor(&dir.join(rel))?;
            let expected: Vec<usize> = std::iter::once(entry.examples)
                .chain(views[i].dims.iter().copied())
                .collect();
            if tensor.shape() != expected.as_slice() {
                return Err(CliError::Data(format!(
                    "{rel}: shape {:?}, manifest expects {expected:?}",
                    tensor.shape()
                )));
            }
            features.push(tensor);
        }
        let labels_t = read_tensor(&dir.join(&entry.labels))?;
        if labels_t.shape() != [entry.examples] {
            return Err(CliError::Data(format!(
                "{}: labels shape {:?}, manifest expects [{}]",
                entry.labels,
                labels_t.shape(),
                entry.examples
            )));
        }
        if entry.splits.len() != entry.examples {
            return Err(CliError::Data(format!(
                "task {}: {} split tags for {} examples",
                entry.id,
                entry.splits.len(),
                entry.examples
            )));
        }
        tasks.push(TaskData {
            features,
            labels: labels_t.into_data(),
            splits: entry.splits.iter().map(|&s| s.into()).collect(),
        });
    }
    let ds = MultiViewDataset { views, tasks };
    ds.validate()?;
    Ok(ds)
}
