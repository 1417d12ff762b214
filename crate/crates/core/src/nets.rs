//! Per-view feature networks, the fusion head, and optional cross-stitch
//! mixing between views.
//!
//! A [`MultiViewModel`] holds one layer stack per view. Each stack position
//! can be widened into branches; the branch a sample flows through depends on
//! which task group owns the sample's task at that depth. Depths are counted
//! from the output side (depth 0 is the layer feeding the fusion heads), and
//! all views share one partition of the task set per depth. The fusion head
//! concatenates the per-view feature blocks and maps them through a dense
//! layer whose rows encode how much each view contributes.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fmath;
use crate::params::{glorot_uniform, ParamId, ParamStore};
use crate::tape::{Activation, NodeId, Tape};
use crate::tensor::Tensor;

/// Data type of one view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    /// Flat feature vectors, per-sample shape `[d]`.
    Vector,
    /// Channel-height-width images, per-sample shape `[c, h, w]`.
    Image2d,
    /// Token sequences of embeddings, per-sample shape `[k, d]`.
    Sequence1d,
}

/// One entry of a view's layer plan.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerKind {
    Dense { width: usize, activation: Activation },
    Conv2d { filters: usize, kh: usize, kw: usize, stride: usize, activation: Activation },
    Conv1d { filters: usize, ks: usize, activation: Activation },
    Flatten,
}

/// Static description of one view's network.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewSpec {
    pub view_id: usize,
    pub modality: Modality,
    /// Per-sample input shape (no batch dimension).
    pub input_shape: Vec<usize>,
    pub layer_plan: Vec<LayerKind>,
}

impl ViewSpec {
    /// Per-sample output shape after each plan entry. Fails when the plan is
    /// incompatible with the modality or does not end in a flat feature row.
    pub fn layer_output_shapes(&self) -> Result<Vec<Vec<usize>>> {
        let expected_rank = match self.modality {
            Modality::Vector => 1,
            Modality::Sequence1d => 2,
            Modality::Image2d => 3,
        };
        if self.input_shape.len() != expected_rank {
            return Err(Error::Config(format!(
                "view {}: {:?} modality wants a rank-{expected_rank} sample shape, got {:?}",
                self.view_id, self.modality, self.input_shape
            )));
        }
        if self.input_shape.iter().any(|&d| d == 0) {
            return Err(Error::Config(format!(
                "view {}: zero-sized input dimension in {:?}",
                self.view_id, self.input_shape
            )));
        }
        if self.layer_plan.is_empty() {
            return Err(Error::Config(format!("view {}: empty layer plan", self.view_id)));
        }
        let mut current = self.input_shape.clone();
        let mut shapes = Vec::with_capacity(self.layer_plan.len());
        for (li, kind) in self.layer_plan.iter().enumerate() {
            current = match kind {
                LayerKind::Dense { width, .. } => {
                    if current.len() != 1 {
                        return Err(Error::Config(format!(
                            "view {} layer {li}: dense needs flat input, have {:?} (missing flatten?)",
                            self.view_id, current
                        )));
                    }
                    if *width == 0 {
                        return Err(Error::Config(format!(
                            "view {} layer {li}: zero-width dense layer",
                            self.view_id
                        )));
                    }
                    vec![*width]
                }
                LayerKind::Conv2d { filters, kh, kw, stride, .. } => {
                    if current.len() != 3 {
                        return Err(Error::Config(format!(
                            "view {} layer {li}: conv2d needs [c,h,w] input, have {:?}",
                            self.view_id, current
                        )));
                    }
                    let (h, w) = (current[1], current[2]);
                    if *kh > h || *kw > w {
                        return Err(Error::Config(format!(
                            "view {} layer {li}: kernel {kh}x{kw} larger than input {h}x{w}",
                            self.view_id
                        )));
                    }
                    if *stride == 0 || *filters == 0 {
                        return Err(Error::Config(format!(
                            "view {} layer {li}: stride and filters must be positive",
                            self.view_id
                        )));
                    }
                    vec![*filters, (h - kh) / stride + 1, (w - kw) / stride + 1]
                }
                LayerKind::Conv1d { filters, ks, .. } => {
                    if current.len() != 2 {
                        return Err(Error::Config(format!(
                            "view {} layer {li}: conv1d needs [tokens,embed] input, have {:?}",
                            self.view_id, current
                        )));
                    }
                    if *ks > current[0] {
                        return Err(Error::Config(format!(
                            "view {} layer {li}: kernel span {ks} exceeds {} tokens",
                            self.view_id, current[0]
                        )));
                    }
                    if *filters == 0 || *ks == 0 {
                        return Err(Error::Config(format!(
                            "view {} layer {li}: filters and kernel span must be positive",
                            self.view_id
                        )));
                    }
                    // Flattened later; conv1d output is [filters, positions].
                    vec![*filters, current[0] - ks + 1]
                }
                LayerKind::Flatten => {
                    vec![current.iter().product()]
                }
            };
            shapes.push(current.clone());
        }
        if shapes.last().map(|s| s.len()) != Some(1) {
            return Err(Error::Config(format!(
                "view {}: plan must end in a flat feature row, ends in {:?}",
                self.view_id,
                shapes.last()
            )));
        }
        Ok(shapes)
    }

    /// Width of the final feature row.
    pub fn feature_width(&self) -> Result<usize> {
        Ok(self.layer_output_shapes()?.last().expect("plan nonempty")[0])
    }
}

/// Trainable tensors of one branch of one layer; flatten owns none.
#[derive(Debug, Clone)]
pub struct LayerParams {
    pub weight: Option<ParamId>,
    pub bias: Option<ParamId>,
}

/// One stack position of a view, possibly widened into branches.
#[derive(Debug, Clone)]
pub struct DepthLayer {
    pub kind: LayerKind,
    /// `branches[g]` serves task group `g` of the partition at this depth.
    pub branches: Vec<LayerParams>,
}

/// Ordered (input to output) stack of layers for one view.
#[derive(Debug, Clone)]
pub struct ViewStack {
    pub layers: Vec<DepthLayer>,
}

/// Dense output layer over the concatenated view features of one task group.
#[derive(Debug, Clone)]
pub struct FusionHead {
    /// `[(sum of view widths) x tasks.len()]`
    pub weights: ParamId,
    pub bias: ParamId,
    pub activation: Activation,
    /// Row ranges of `weights` owned by each view, in view order.
    pub view_ranges: Vec<(usize, usize)>,
    /// Ascending task ids; column `c` predicts `tasks[c]`.
    pub tasks: Vec<usize>,
}

/// Trainable `m x m` mixer across the views' aligned features.
#[derive(Debug, Clone)]
pub struct CrossStitchUnit {
    pub mixing: ParamId,
}

/// Where a cross-stitch unit sits, counted from the output side.
#[derive(Debug, Clone)]
pub struct StitchPlacement {
    pub depth_from_output: usize,
    pub unit: CrossStitchUnit,
}

/// The full multi-view, multi-task model.
#[derive(Debug, Clone)]
pub struct MultiViewModel {
    pub task_count: usize,
    pub specs: Vec<ViewSpec>,
    pub stacks: Vec<ViewStack>,
    /// `partitions[t]` groups tasks at depth `t` from the output; unsplit
    /// depths are implicitly one trunk group. `partitions[0]` is the finest.
    pub partitions: Vec<Vec<Vec<usize>>>,
    /// One head per group of `partitions[0]`; a single head before any split.
    pub heads: Vec<FusionHead>,
    pub stitches: Vec<StitchPlacement>,
    pub store: ParamStore,
}

/// Raw per-view weight magnitudes and their normalized shares.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewWeights {
    pub raw: Vec<f64>,
    pub shares: Vec<f64>,
}

fn register_layer(
    store: &mut ParamStore,
    rng: &mut ChaCha8Rng,
    prefix: &str,
    kind: &LayerKind,
    input_shape: &[usize],
) -> Result<LayerParams> {
    match kind {
        LayerKind::Dense { width, .. } => {
            let fan_in = input_shape[0];
            let w = glorot_uniform(&[fan_in, *width], fan_in, *width, rng);
            let weight = store.register(&format!("{prefix}/w"), w)?;
            let bias = store.register(&format!("{prefix}/b"), Tensor::zeros(&[*width]))?;
            Ok(LayerParams { weight: Some(weight), bias: Some(bias) })
        }
        LayerKind::Conv2d { filters, kh, kw, .. } => {
            let c = input_shape[0];
            let fan_in = c * kh * kw;
            let fan_out = filters * kh * kw;
            let w = glorot_uniform(&[*filters, c, *kh, *kw], fan_in, fan_out, rng);
            let weight = store.register(&format!("{prefix}/w"), w)?;
            let bias = store.register(&format!("{prefix}/b"), Tensor::zeros(&[*filters]))?;
            Ok(LayerParams { weight: Some(weight), bias: Some(bias) })
        }
        LayerKind::Conv1d { filters, ks, .. } => {
            let d = input_shape[1];
            let fan_in = ks * d;
            let w = glorot_uniform(&[*filters, *ks, d], fan_in, *filters, rng);
            let weight = store.register(&format!("{prefix}/w"), w)?;
            let bias = store.register(&format!("{prefix}/b"), Tensor::zeros(&[*filters]))?;
            Ok(LayerParams { weight: Some(weight), bias: Some(bias) })
        }
        LayerKind::Flatten => Ok(LayerParams { weight: None, bias: None }),
    }
}

fn build_stack(
    spec: &ViewSpec,
    store: &mut ParamStore,
    rng: &mut ChaCha8Rng,
) -> Result<ViewStack> {
    let shapes = spec.layer_output_shapes()?;
    let mut layers = Vec::with_capacity(spec.layer_plan.len());
    for (li, kind) in spec.layer_plan.iter().enumerate() {
        let input_shape = if li == 0 { &spec.input_shape } else { &shapes[li - 1] };
        let prefix = format!("v{}/l{li}", spec.view_id);
        let trunk = register_layer(store, rng, &prefix, kind, input_shape)?;
        layers.push(DepthLayer { kind: kind.clone(), branches: vec![trunk] });
    }
    Ok(ViewStack { layers })
}

/// Builds a standalone single-view network with its own parameter store.
///
/// Forward it with [`view_forward`]; the same seed yields identical initial
/// parameters.
pub fn build_view_network(spec: &ViewSpec, seed: u64) -> Result<(ViewStack, ParamStore)> {
    let mut store = ParamStore::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stack = build_stack(spec, &mut store, &mut rng)?;
    Ok((stack, store))
}

fn apply_layer(
    tape: &mut Tape,
    store: &ParamStore,
    kind: &LayerKind,
    params: &LayerParams,
    x: NodeId,
) -> Result<NodeId> {
    match kind {
        LayerKind::Dense { activation, .. } => {
            let w = tape.param(store, params.weight.expect("dense has weights"));
            let b = tape.param(store, params.bias.expect("dense has bias"));
            let y = tape.dense(x, w, b)?;
            Ok(tape.activation(y, *activation))
        }
        LayerKind::Conv2d { stride, activation, .. } => {
            let w = tape.param(store, params.weight.expect("conv2d has weights"));
            let b = tape.param(store, params.bias.expect("conv2d has bias"));
            let y = tape.conv2d(x, w, b, *stride)?;
            Ok(tape.activation(y, *activation))
        }
        LayerKind::Conv1d { activation, .. } => {
            let w = tape.param(store, params.weight.expect("conv1d has weights"));
            let b = tape.param(store, params.bias.expect("conv1d has bias"));
            let y = tape.conv1d(x, w, b)?;
            Ok(tape.activation(y, *activation))
        }
        LayerKind::Flatten => tape.flatten(x),
    }
}

/// Runs a standalone view stack on a batch, always through branch 0.
pub fn view_forward(
    tape: &mut Tape,
    store: &ParamStore,
    stack: &ViewStack,
    x: NodeId,
) -> Result<NodeId> {
    let mut cur = x;
    for layer in &stack.layers {
        cur = apply_layer(tape, store, &layer.kind, &layer.branches[0], cur)?;
    }
    Ok(cur)
}

/// Concatenates per-view features and applies the head's dense + activation.
pub fn fuse_forward(
    tape: &mut Tape,
    store: &ParamStore,
    features: &[NodeId],
    head: &FusionHead,
) -> Result<NodeId> {
    if features.len() != head.view_ranges.len() {
        return Err(Error::Dimension(format!(
            "{} feature blocks vs {} head view ranges",
            features.len(),
            head.view_ranges.len()
        )));
    }
    for (i, (&f, &(lo, hi))) in features.iter().zip(&head.view_ranges).enumerate() {
        let width = tape.value(f).shape()[1];
        if width != hi - lo {
            return Err(Error::Dimension(format!(
                "view {i} features are {width} wide, head expects {}",
                hi - lo
            )));
        }
    }
    let fused = tape.concat(features)?;
    let w = tape.param(store, head.weights);
    let b = tape.param(store, head.bias);
    let out = tape.dense(fused, w, b)?;
    Ok(tape.activation(out, head.activation))
}

/// Applies one cross-stitch unit to aligned per-view features, producing one
/// mixed tensor per view: `out_v = sum_u mixing[v][u] * feat_u`.
pub fn cross_stitch_mix(
    tape: &mut Tape,
    store: &ParamStore,
    features: &[NodeId],
    unit: &CrossStitchUnit,
) -> Result<Vec<NodeId>> {
    let mixing = tape.param(store, unit.mixing);
    let mut out = Vec::with_capacity(features.len());
    for v in 0..features.len() {
        out.push(tape.cross_stitch_row(features, mixing, v)?);
    }
    Ok(out)
}

/// Mean absolute value of the head rows owned by each view, plus shares.
pub fn extract_view_weights(head: &FusionHead, store: &ParamStore) -> ViewWeights {
    let w = store.value(head.weights);
    let cols = w.shape()[1];
    let mut raw = Vec::with_capacity(head.view_ranges.len());
    for &(lo, hi) in &head.view_ranges {
        let mut acc = 0.0;
        for r in lo..hi {
            for c in 0..cols {
                acc += fmath::abs(w.at2(r, c));
            }
        }
        raw.push(acc / ((hi - lo) * cols) as f64);
    }
    let sum: f64 = raw.iter().sum();
    let shares = if sum > 0.0 {
        raw.iter().map(|v| v / sum).collect()
    } else {
        vec![1.0 / raw.len() as f64; raw.len()]
    };
    ViewWeights { raw, shares }
}

/// Per-task forward pass artifacts on a shared tape.
pub struct TaskForward {
    /// Final feature block per view, each `[n x h_i]`.
    pub features: Vec<NodeId>,
    /// Head output `[n x tasks-in-head]`.
    pub head_out: NodeId,
    /// This task's probability column `[n x 1]`.
    pub prediction: NodeId,
}

impl MultiViewModel {
    /// Assembles per-view trunks, one fusion head over all tasks, and (when
    /// `cross_stitch` is set) identity-initialized stitch units at every
    /// output-aligned depth where all views expose equal-width features.
    /// Views whose final widths disagree get a dense adapter appended so at
    /// least the pre-fusion depth qualifies.
    pub fn build(
        specs: Vec<ViewSpec>,
        task_count: usize,
        seed: u64,
        cross_stitch: bool,
    ) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Config(String::from("model needs at least one view")));
        }
        if task_count == 0 {
            return Err(Error::Config(String::from("model needs at least one task")));
        }
        for (i, spec) in specs.iter().enumerate() {
            if spec.view_id != i {
                return Err(Error::Config(format!(
                    "view specs must be ordered by id; found id {} at position {i}",
                    spec.view_id
                )));
            }
        }

        let mut specs = specs;
        if cross_stitch {
            let widths: Vec<usize> =
                specs.iter().map(|s| s.feature_width()).collect::<Result<_>>()?;
            let common = *widths.iter().max().expect("at least one view");
            for (spec, &w) in specs.iter_mut().zip(&widths) {
                if w != common {
                    spec.layer_plan
                        .push(LayerKind::Dense { width: common, activation: Activation::Identity });
                }
            }
        }

        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut stacks = Vec::with_capacity(specs.len());
        for spec in &specs {
            stacks.push(build_stack(spec, &mut store, &mut rng)?);
        }

        let widths: Vec<usize> = specs.iter().map(|s| s.feature_width()).collect::<Result<_>>()?;
        let total: usize = widths.iter().sum();
        let mut view_ranges = Vec::with_capacity(widths.len());
        let mut offset = 0;
        for &w in &widths {
            view_ranges.push((offset, offset + w));
            offset += w;
        }
        let w = glorot_uniform(&[total, task_count], total, task_count, &mut rng);
        let weights = store.register("head/init/w", w)?;
        let bias = store.register("head/init/b", Tensor::zeros(&[task_count]))?;
        let head = FusionHead {
            weights,
            bias,
            activation: Activation::Sigmoid,
            view_ranges,
            tasks: (0..task_count).collect(),
        };

        let mut stitches = Vec::new();
        if cross_stitch {
            let m = specs.len();
            let all_shapes: Vec<Vec<Vec<usize>>> =
                specs.iter().map(|s| s.layer_output_shapes()).collect::<Result<_>>()?;
            let min_len = all_shapes.iter().map(|s| s.len()).min().expect("nonempty");
            for depth in 0..min_len {
                let aligned: Vec<&Vec<usize>> =
                    all_shapes.iter().map(|s| &s[s.len() - 1 - depth]).collect();
                let flat_equal = aligned.iter().all(|s| s.len() == 1 && s[0] == aligned[0][0]);
                if !flat_equal {
                    continue;
                }
                let mut mix = Tensor::zeros(&[m, m]);
                for i in 0..m {
                    for j in 0..m {
                        let noise = rng.gen_range(-0.01..=0.01);
                        mix.set2(i, j, if i == j { 1.0 + noise } else { noise });
                    }
                }
                let mixing = store.register(&format!("stitch/d{depth}/m"), mix)?;
                stitches
                    .push(StitchPlacement { depth_from_output: depth, unit: CrossStitchUnit { mixing } });
            }
        }

        Ok(MultiViewModel {
            task_count,
            specs,
            stacks,
            partitions: Vec::new(),
            heads: vec![head],
            stitches,
            store,
        })
    }

    /// Task group index at a given depth from the output; unsplit depths are
    /// one trunk group.
    pub fn group_of(&self, task: usize, depth: usize) -> usize {
        match self.partitions.get(depth) {
            Some(groups) => groups
                .iter()
                .position(|g| g.contains(&task))
                .expect("partitions cover every task"),
            None => 0,
        }
    }

    /// Head owning a task.
    pub fn head_of(&self, task: usize) -> &FusionHead {
        self.heads
            .iter()
            .find(|h| h.tasks.contains(&task))
            .expect("heads cover every task")
    }

    /// Forward pass for one task's batch on a caller-provided tape.
    pub fn forward_task_on(
        &self,
        tape: &mut Tape,
        task: usize,
        view_inputs: &[Tensor],
    ) -> Result<TaskForward> {
        if task >= self.task_count {
            return Err(Error::Usage(format!("task {task} out of 0..{}", self.task_count)));
        }
        if view_inputs.len() != self.specs.len() {
            return Err(Error::Dimension(format!(
                "{} input tensors for {} views",
                view_inputs.len(),
                self.specs.len()
            )));
        }
        let n = view_inputs[0].shape()[0];
        for (spec, input) in self.specs.iter().zip(view_inputs) {
            let expected: Vec<usize> =
                core::iter::once(n).chain(spec.input_shape.iter().copied()).collect();
            if input.shape() != expected.as_slice() {
                return Err(Error::Dimension(format!(
                    "view {} batch shape {:?}, expected {:?}",
                    spec.view_id,
                    input.shape(),
                    expected
                )));
            }
        }

        let max_len = self.stacks.iter().map(|s| s.layers.len()).max().expect("views exist");
        let mut current: Vec<NodeId> =
            view_inputs.iter().map(|t| tape.input(t.clone())).collect();
        for step in (0..max_len).rev() {
            for (v, stack) in self.stacks.iter().enumerate() {
                let len = stack.layers.len();
                if len <= step {
                    continue;
                }
                let li = len - 1 - step;
                let layer = &stack.layers[li];
                let group = self.group_of(task, step);
                current[v] =
                    apply_layer(tape, &self.store, &layer.kind, &layer.branches[group], current[v])?;
            }
            if let Some(placement) =
                self.stitches.iter().find(|p| p.depth_from_output == step)
            {
                current = cross_stitch_mix(tape, &self.store, &current, &placement.unit)?;
            }
        }

        let head = self.head_of(task);
        let head_out = fuse_forward(tape, &self.store, &current, head)?;
        let col = head.tasks.iter().position(|&t| t == task).expect("head owns task");
        let prediction = tape.slice_cols(head_out, col, col + 1)?;
        Ok(TaskForward { features: current, head_out, prediction })
    }

    /// Probability predictions for one task's batch.
    pub fn predict_task(&self, task: usize, view_inputs: &[Tensor]) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let fwd = self.forward_task_on(&mut tape, task, view_inputs)?;
        Ok(tape.value(fwd.prediction).data().to_vec())
    }

    /// Per-view predictions for one task: each view's feature block is pushed
    /// through only its own rows of the fusion head (other views masked),
    /// keeping the shared bias. Used to estimate per-view task affinities.
    pub fn per_view_predictions(
        &self,
        task: usize,
        view_inputs: &[Tensor],
    ) -> Result<Vec<Vec<f64>>> {
        let mut tape = Tape::new();
        let fwd = self.forward_task_on(&mut tape, task, view_inputs)?;
        let head = self.head_of(task);
        let col = head.tasks.iter().position(|&t| t == task).expect("head owns task");
        let w = self.store.value(head.weights);
        let b = self.store.value(head.bias).data()[col];
        let n = view_inputs[0].shape()[0];
        let mut out = Vec::with_capacity(self.specs.len());
        for (v, &(lo, hi)) in head.view_ranges.iter().enumerate() {
            let feats = tape.value(fwd.features[v]);
            let mut preds = Vec::with_capacity(n);
            for i in 0..n {
                let mut logit = b;
                for r in lo..hi {
                    logit += feats.at2(i, r - lo) * w.at2(r, col);
                }
                preds.push(1.0 / (1.0 + fmath::exp(-logit)));
            }
            out.push(preds);
        }
        Ok(out)
    }

    /// Tape nodes for every weight tensor (not biases) of one view across all
    /// branches, in deterministic order; feeds the objective's regularizer.
    pub fn view_weight_nodes(&self, tape: &mut Tape, view: usize) -> Vec<NodeId> {
        let mut nodes = Vec::new();
        for layer in &self.stacks[view].layers {
            for branch in &layer.branches {
                if let Some(w) = branch.weight {
                    nodes.push(tape.param(&self.store, w));
                }
            }
        }
        nodes
    }

    /// Aggregated view weights over all fusion heads.
    pub fn view_weights(&self) -> ViewWeights {
        let m = self.specs.len();
        let mut sums = vec![0.0; m];
        let mut counts = vec![0usize; m];
        for head in &self.heads {
            let w = self.store.value(head.weights);
            let cols = w.shape()[1];
            for (v, &(lo, hi)) in head.view_ranges.iter().enumerate() {
                for r in lo..hi {
                    for c in 0..cols {
                        sums[v] += fmath::abs(w.at2(r, c));
                    }
                }
                counts[v] += (hi - lo) * cols;
            }
        }
        let raw: Vec<f64> =
            sums.iter().zip(&counts).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
        let sum: f64 = raw.iter().sum();
        let shares = if sum > 0.0 {
            raw.iter().map(|v| v / sum).collect()
        } else {
            vec![1.0 / m as f64; m]
        };
        ViewWeights { raw, shares }
    }

    /// Structural checks: partitions cover the tasks, refine monotonically
    /// toward the output, and branch counts agree with the partitions in
    /// every view.
    pub fn check_invariants(&self) -> Result<()> {
        for (t, groups) in self.partitions.iter().enumerate() {
            let mut seen = vec![false; self.task_count];
            for g in groups {
                if g.is_empty() {
                    return Err(Error::Structural(format!("empty group at depth {t}")));
                }
                for &task in g {
                    if task >= self.task_count || seen[task] {
                        return Err(Error::Structural(format!(
                            "depth {t} does not partition the task set"
                        )));
                    }
                    seen[task] = true;
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::Structural(format!("depth {t} misses a task")));
            }
            if t > 0 {
                // Every finer group (closer to the output) must sit inside
                // exactly one group at this deeper depth.
                for finer in &self.partitions[t - 1] {
                    let host = groups.iter().filter(|g| finer.iter().all(|x| g.contains(x)));
                    if host.count() != 1 {
                        return Err(Error::Structural(format!(
                            "partition at depth {t} does not coarsen depth {}",
                            t - 1
                        )));
                    }
                }
            }
        }
        for (v, stack) in self.stacks.iter().enumerate() {
            let len = stack.layers.len();
            for (li, layer) in stack.layers.iter().enumerate() {
                let depth = len - 1 - li;
                let expected = match self.partitions.get(depth) {
                    Some(groups) => groups.len(),
                    None => 1,
                };
                if layer.branches.len() != expected {
                    return Err(Error::Structural(format!(
                        "view {v} layer {li} has {} branches, partition wants {expected}",
                        layer.branches.len()
                    )));
                }
            }
        }
        let mut covered = vec![false; self.task_count];
        for head in &self.heads {
            for &t in &head.tasks {
                if covered[t] {
                    return Err(Error::Structural(format!("task {t} owned by two heads")));
                }
                covered[t] = true;
            }
        }
        if covered.iter().any(|c| !c) {
            return Err(Error::Structural(String::from("a task has no fusion head")));
        }
        Ok(())
    }

    /// Total branch-layer count across every view and depth.
    pub fn total_branches(&self) -> usize {
        self.stacks.iter().flat_map(|s| s.layers.iter()).map(|l| l.branches.len()).sum()
    }

    /// Plain-data snapshot of the architecture for serialization.
    pub fn architecture(&self) -> ArchitectureDesc {
        ArchitectureDesc {
            task_count: self.task_count,
            views: self
                .specs
                .iter()
                .zip(&self.stacks)
                .map(|(spec, stack)| ViewDesc {
                    view_id: spec.view_id,
                    modality: spec.modality,
                    input_shape: spec.input_shape.clone(),
                    layers: spec.layer_plan.clone(),
                    branch_counts: stack.layers.iter().map(|l| l.branches.len()).collect(),
                })
                .collect(),
            partitions: self.partitions.clone(),
            heads: self
                .heads
                .iter()
                .map(|h| HeadDesc {
                    tasks: h.tasks.clone(),
                    rows: self.store.value(h.weights).shape()[0],
                    columns: h.tasks.len(),
                    view_ranges: h.view_ranges.clone(),
                })
                .collect(),
            cross_stitch_depths: self.stitches.iter().map(|p| p.depth_from_output).collect(),
        }
    }
}

/// Serializable structural summary of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureDesc {
    pub task_count: usize,
    pub views: Vec<ViewDesc>,
    pub partitions: Vec<Vec<Vec<usize>>>,
    pub heads: Vec<HeadDesc>,
    pub cross_stitch_depths: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewDesc {
    pub view_id: usize,
    pub modality: Modality,
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerKind>,
    pub branch_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadDesc {
    pub tasks: Vec<usize>,
    pub rows: usize,
    pub columns: usize,
    pub view_ranges: Vec<(usize, usize)>,
}
