//! Architecture JSON: the stable structural description consumed by the
//! `report` command and by model reload.

use std::path::Path;

use serde::{Deserialize, Serialize};

use mtmv_core::nets::{ArchitectureDesc, HeadDesc, ViewDesc, ViewSpec};

use crate::config_io::{LayerField, ModalityField};
use crate::error::{CliError, Result};

const FORMAT: &str = "mtmv-architecture";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureFile {
    pub format: String,
    pub version: u32,
    pub task_count: usize,
    pub views: Vec<ViewField>,
    pub partitions: Vec<Vec<Vec<usize>>>,
    pub heads: Vec<HeadField>,
    pub cross_stitch_depths: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ViewField {
    pub view_id: usize,
    pub modality: ModalityField,
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerField>,
    pub branch_counts: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HeadField {
    pub tasks: Vec<usize>,
    pub rows: usize,
    pub columns: usize,
    pub view_ranges: Vec<(usize, usize)>,
}

impl From<&ArchitectureDesc> for ArchitectureFile {
    fn from(a: &ArchitectureDesc) -> Self {
        ArchitectureFile {
            format: FORMAT.to_string(),
            version: VERSION,
            task_count: a.task_count,
            views: a
                .views
                .iter()
                .map(|v| ViewField {
                    view_id: v.view_id,
                    modality: v.modality.into(),
                    input_shape: v.input_shape.clone(),
                    layers: v.layers.iter().cloned().map(Into::into).collect(),
                    branch_counts: v.branch_counts.clone(),
                })
                .collect(),
            partitions: a.partitions.clone(),
            heads: a
                .heads
                .iter()
                .map(|h| HeadField {
                    tasks: h.tasks.clone(),
                    rows: h.rows,
                    columns: h.columns,
                    view_ranges: h.view_ranges.clone(),
                })
                .collect(),
            cross_stitch_depths: a.cross_stitch_depths.clone(),
        }
    }
}

impl ArchitectureFile {
    pub fn into_desc(self) -> ArchitectureDesc {
        ArchitectureDesc {
            task_count: self.task_count,
            views: self
                .views
                .into_iter()
                .map(|v| ViewDesc {
                    view_id: v.view_id,
                    modality: v.modality.into(),
                    input_shape: v.input_shape,
                    layers: v.layers.into_iter().map(Into::into).collect(),
                    branch_counts: v.branch_counts,
                })
                .collect(),
            partitions: self.partitions,
            heads: self
                .heads
                .into_iter()
                .map(|h| HeadDesc {
                    tasks: h.tasks,
                    rows: h.rows,
                    columns: h.columns,
                    view_ranges: h.view_ranges,
                })
                .collect(),
            cross_stitch_depths: self.cross_stitch_depths,
        }
    }

    /// View specs for rebuilding the model structurally.
    pub fn view_specs(desc: &ArchitectureDesc) -> Vec<ViewSpec> {
        desc.views
            .iter()
            .map(|v| ViewSpec {
                view_id: v.view_id,
                modality: v.modality,
                input_shape: v.input_shape.clone(),
                layer_plan: v.layers.clone(),
            })
            .collect()
    }
}

pub fn save_architecture(desc: &ArchitectureDesc, path: &Path) -> Result<()> {
    let file = ArchitectureFile::from(desc);
    std::fs::write(path, serde_json::to_string_pretty(&file)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(())
}

pub fn load_architecture(path: &Path) -> Result<ArchitectureDesc> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let file: ArchitectureFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if file.format != FORMAT {
        return Err(CliError::Data(format!(
            "{}: format `{}`, expected `{FORMAT}`",
            path.display(),
            file.format
        )));
    }
    if file.version != VERSION {
        return Err(CliError::Data(format!(
            "{}: version {}, expected {VERSION}",
            path.display(),
            file.version
        )));
    }
    Ok(file.into_desc())
}
