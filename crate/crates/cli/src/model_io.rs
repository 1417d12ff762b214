//! Model reload: rebuild the structure from an architecture file, replay the
//! recorded splits, then overwrite every parameter from the saved container.
//! The structural replay reproduces the original parameter naming scheme, so
//! loading matches by name and fails loudly on any mismatch.

use std::collections::BTreeSet;
use std::path::Path;

use mtmv_core::clustering::{ClusterAssignment, SplitDecision};
use mtmv_core::nets::MultiViewModel;
use mtmv_core::widening::split_layer;
use mtmv_core::Tensor;

use crate::arch_io::{load_architecture, ArchitectureFile};
use crate::error::{CliError, Result};
use crate::params_io::load_params;

pub const ARCH_FILE: &str = "architecture.json";
pub const PARAMS_FILE: &str = "params.mtmvp";

/// Loads `architecture.json` + `params.mtmvp` from a training output dir.
pub fn load_model(dir: &Path) -> Result<MultiViewModel> {
    let desc = load_architecture(&dir.join(ARCH_FILE))?;
    let params = load_params(&dir.join(PARAMS_FILE))?;
    rebuild_model(&desc, params)
}

/// Rebuilds a model from its structural description and named parameters.
pub fn rebuild_model(
    desc: &mtmv_core::nets::ArchitectureDesc,
    params: Vec<(String, Tensor)>,
) -> Result<MultiViewModel> {
    let specs = ArchitectureFile::view_specs(desc);
    let cross_stitch = !desc.cross_stitch_depths.is_empty();
    let mut model = MultiViewModel::build(specs, desc.task_count, 0, cross_stitch)?;

    // Replay the recorded splits to recreate branches, heads and names.
    for (depth, groups) in desc.partitions.iter().enumerate() {
        let subjects: Vec<Vec<usize>> = if depth == 0 {
            (0..desc.task_count).map(|t| vec![t]).collect()
        } else {
            desc.partitions[depth - 1].clone()
        };
        let mut labels = vec![usize::MAX; subjects.len()];
        for (s, subject) in subjects.iter().enumerate() {
            let host = groups.iter().position(|g| subject.iter().all(|t| g.contains(t)));
            labels[s] = host.ok_or_else(|| {
                CliError::Data(format!(
                    "architecture partitions at depth {depth} do not coarsen depth {}",
                    depth.saturating_sub(1)
                ))
            })?;
        }
        let decision = SplitDecision {
            d: groups.len(),
            assignment: ClusterAssignment { labels, d: groups.len() },
            loss: 0.0,
            candidates: vec![],
        };
        split_layer(&mut model, depth, &decision)?;
    }

    // Overwrite parameter values by name.
    let expected: BTreeSet<String> =
        model.store.iter().map(|(_, name, _)| name.to_string()).collect();
    let provided: BTreeSet<String> = params.iter().map(|(n, _)| n.clone()).collect();
    if expected != provided {
        let missing: Vec<_> = expected.difference(&provided).take(3).collect();
        let extra: Vec<_> = provided.difference(&expected).take(3).collect();
        return Err(CliError::Data(format!(
            "parameter names do not match the architecture (missing: {missing:?}, unexpected: {extra:?})"
        )));
    }
    for (name, value) in params {
        let id = model.store.find(&name).expect("name checked");
        if model.store.value(id).shape() != value.shape() {
            return Err(CliError::Data(format!(
                "parameter `{name}` has shape {:?}, architecture expects {:?}",
                value.shape(),
                model.store.value(id).shape()
            )));
        }
        *model.store.value_mut(id) = value;
    }
    model.check_invariants()?;
    Ok(model)
}
