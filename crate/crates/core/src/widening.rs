//! The iterative widening driver: train, estimate affinities, pick a split,
//! widen one depth, repeat; then train to convergence.
//!
//! Rounds walk depths from the output layer toward the input, one depth per
//! round. Round `t` clusters the branches created at depth `t-1` (tasks
//! themselves before any split), widens the layer at depth `t` in every view
//! into the chosen number of branches with bit-identical copied weights, and
//! partitions the fusion heads when the split happens at depth 0. The loop
//! stops when the round budget is spent, a round merges everything into one
//! branch, or no widenable depth remains.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::affinity::{branch_affinity, compute_indicators, task_affinity, AffinityMatrix};
use crate::clustering::{select_branching, SelectParams, SplitDecision};
use crate::config::TrainConfig;
use crate::datagen::{MultiViewDataset, Split};
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, MetricsReport};
use crate::nets::{FusionHead, LayerParams, Modality, MultiViewModel, ViewSpec};
use crate::nets::LayerKind;
use crate::tape::{objective, Activation, Tape};
use crate::tensor::Tensor;

/// Loss trajectory and per-task held-out accuracy for one training phase.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoundMetrics {
    pub loss_trajectory: Vec<f64>,
    pub task_accuracy: Vec<f64>,
}

/// Everything the driver decided and measured in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// 1-based round counter.
    pub round: usize,
    /// Depth from the output that was split this round.
    pub depth: usize,
    pub chosen_d: usize,
    /// `(candidate d, split loss)` table.
    pub candidates: Vec<(usize, f64)>,
    /// Cluster id per subject (branch of the previous depth).
    pub assignment: Vec<usize>,
    /// Task partition created at `depth`.
    pub partition: Vec<Vec<usize>>,
    pub view_weights_raw: Vec<f64>,
    pub view_shares: Vec<f64>,
    pub metrics: RoundMetrics,
}

/// Final-phase summary.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalMetrics {
    pub report: MetricsReport,
    pub final_val_loss: f64,
    pub epochs: usize,
}

/// Output of [`deep_mtmv`].
#[derive(Debug)]
pub struct DeepMtmvOutcome {
    pub model: MultiViewModel,
    pub rounds: Vec<RoundRecord>,
    pub final_metrics: FinalMetrics,
}

/// Default layer plans per modality; widths are deliberately small so the
/// whole pipeline stays desk-scale.
pub fn default_plan(modality: Modality, dims: &[usize]) -> Vec<LayerKind> {
    match modality {
        Modality::Vector => vec![
            LayerKind::Dense { width: 16, activation: Activation::Relu },
            LayerKind::Dense { width: 8, activation: Activation::Relu },
        ],
        Modality::Image2d => {
            let kh = dims[1].min(3);
            let kw = dims[2].min(3);
            vec![
                LayerKind::Conv2d { filters: 4, kh, kw, stride: 1, activation: Activation::Relu },
                LayerKind::Flatten,
                LayerKind::Dense { width: 8, activation: Activation::Relu },
            ]
        }
        Modality::Sequence1d => {
            let ks = dims[0].min(2);
            vec![
                LayerKind::Conv1d { filters: 4, ks, activation: Activation::Relu },
                LayerKind::Flatten,
                LayerKind::Dense { width: 8, activation: Activation::Relu },
            ]
        }
    }
}

/// Builds the initial (unsplit) model for a dataset under a config.
pub fn build_model(ds: &MultiViewDataset, cfg: &TrainConfig) -> Result<MultiViewModel> {
    ds.validate()?;
    cfg.validate()?;
    if let Some(plans) = &cfg.view_plans {
        if plans.len() != ds.view_count() {
            return Err(Error::Config(format!(
                "{} view plans for {} views",
                plans.len(),
                ds.view_count()
            )));
        }
    }
    let specs: Vec<ViewSpec> = ds
        .views
        .iter()
        .enumerate()
        .map(|(i, meta)| ViewSpec {
            view_id: i,
            modality: meta.modality,
            input_shape: meta.dims.clone(),
            layer_plan: match &cfg.view_plans {
                Some(plans) => plans[i].clone(),
                None => default_plan(meta.modality, &meta.dims),
            },
        })
        .collect();
    MultiViewModel::build(specs, ds.task_count(), cfg.seed, cfg.cross_stitch)
}

/// Held-out evaluation rows for a task: the valid split, or a deterministic
/// fifth of the train rows when the dataset carries no valid tags.
fn eval_indices(ds: &MultiViewDataset, task: usize) -> Vec<usize> {
    let valid = ds.split_indices(task, Split::Valid);
    if !valid.is_empty() {
        return valid;
    }
    ds.split_indices(task, Split::Train).into_iter().step_by(5).collect()
}

fn train_indices(ds: &MultiViewDataset, task: usize) -> Vec<usize> {
    let train = ds.split_indices(task, Split::Train);
    if !train.is_empty() {
        return train;
    }
    (0..ds.tasks[task].labels.len()).collect()
}

/// One SGD epoch over every task; returns the epoch's objective value.
fn run_epoch(
    model: &mut MultiViewModel,
    ds: &MultiViewDataset,
    cfg: &TrainConfig,
    reg: &[f64],
    per_task_rows: &[Vec<usize>],
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let m = ds.view_count();
    if cfg.batch_size == 0 {
        let mut tape = Tape::new();
        let mut preds = Vec::with_capacity(model.task_count);
        let mut targets = Vec::with_capacity(model.task_count);
        for task in 0..model.task_count {
            let rows = &per_task_rows[task];
            let feats = ds.features_at(task, rows)?;
            let fwd = model.forward_task_on(&mut tape, task, &feats)?;
            preds.push(fwd.prediction);
            targets.push(tape.input(ds.label_column(task, rows)?));
        }
        let weight_nodes: Vec<Vec<_>> =
            (0..m).map(|v| model.view_weight_nodes(&mut tape, v)).collect();
        let loss = objective(&mut tape, &preds, &targets, &weight_nodes, reg)?;
        let value = tape.value(loss).scalar_value()?;
        tape.backward(loss, &mut model.store)?;
        model.store.sgd_step(cfg.learning_rate)?;
        Ok(value)
    } else {
        let mut chunks: Vec<Vec<Vec<usize>>> = Vec::with_capacity(model.task_count);
        for rows in per_task_rows {
            let mut shuffled = rows.clone();
            shuffled.shuffle(rng);
            chunks.push(shuffled.chunks(cfg.batch_size).map(|c| c.to_vec()).collect());
        }
        let steps = chunks.iter().map(|c| c.len()).max().unwrap_or(0);
        let reg_step: Vec<f64> = reg.iter().map(|l| l / steps.max(1) as f64).collect();
        let mut total = 0.0;
        for s in 0..steps {
            let mut tape = Tape::new();
            let mut preds = Vec::new();
            let mut targets = Vec::new();
            for task in 0..model.task_count {
                let Some(rows) = chunks[task].get(s) else { continue };
                let feats = ds.features_at(task, rows)?;
                let fwd = model.forward_task_on(&mut tape, task, &feats)?;
                preds.push(fwd.prediction);
                targets.push(tape.input(ds.label_column(task, rows)?));
            }
            if preds.is_empty() {
                continue;
            }
            let weight_nodes: Vec<Vec<_>> =
                (0..m).map(|v| model.view_weight_nodes(&mut tape, v)).collect();
            let loss = objective(&mut tape, &preds, &targets, &weight_nodes, &reg_step)?;
            total += tape.value(loss).scalar_value()?;
            tape.backward(loss, &mut model.store)?;
            model.store.sgd_step(cfg.learning_rate)?;
        }
        Ok(total)
    }
}

/// Per-task accuracy on held-out rows.
fn held_out_accuracy(model: &MultiViewModel, ds: &MultiViewDataset) -> Result<Vec<f64>> {
    let mut acc = Vec::with_capacity(model.task_count);
    for task in 0..model.task_count {
        let rows = eval_indices(ds, task);
        let feats = ds.features_at(task, &rows)?;
        let preds = model.predict_task(task, &feats)?;
        let labels: Vec<f64> = rows.iter().map(|&i| ds.tasks[task].labels[i]).collect();
        let c = crate::metrics::Confusion::count(&preds, &labels)?;
        acc.push(c.accuracy());
    }
    Ok(acc)
}

/// Trains the current architecture for `epochs` epochs of SGD on the joint
/// objective. Zero epochs touch nothing and return empty metrics. Training
/// aborts with the last finite loss when the objective stops being finite.
pub fn train_round(
    model: &mut MultiViewModel,
    ds: &MultiViewDataset,
    cfg: &TrainConfig,
    epochs: usize,
    salt: u64,
) -> Result<RoundMetrics> {
    if epochs == 0 {
        return Ok(RoundMetrics::default());
    }
    let reg = cfg.resolved_view_reg(ds.view_count())?;
    let per_task_rows: Vec<Vec<usize>> =
        (0..model.task_count).map(|t| train_indices(ds, t)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ salt.wrapping_mul(0x9e3779b97f4a7c15));
    let mut trajectory = Vec::with_capacity(epochs);
    let mut last_finite = f64::NAN;
    for _ in 0..epochs {
        let loss = run_epoch(model, ds, cfg, &reg, &per_task_rows, &mut rng)?;
        if !loss.is_finite() {
            return Err(Error::Training {
                message: String::from("objective stopped being finite"),
                last_finite_loss: last_finite,
            });
        }
        last_finite = loss;
        trajectory.push(loss);
    }
    let task_accuracy = held_out_accuracy(model, ds)?;
    Ok(RoundMetrics { loss_trajectory: trajectory, task_accuracy })
}

/// Per-view task affinity matrices from held-out predictions.
///
/// Each task is scored by the branch that currently owns it; per-view
/// predictions mask the other views' fusion rows. The evaluation set pairs
/// the i-th held-out example of every task, which is exact for datasets
/// whose tasks share examples (as generated here) and a positional pairing
/// otherwise.
pub fn view_task_affinities(
    model: &MultiViewModel,
    ds: &MultiViewDataset,
) -> Result<Vec<AffinityMatrix>> {
    let t = model.task_count;
    let m = ds.view_count();
    let per_task_rows: Vec<Vec<usize>> = (0..t).map(|j| eval_indices(ds, j)).collect();
    let n = per_task_rows.iter().map(|r| r.len()).min().unwrap_or(0);
    if n == 0 {
        return Err(Error::Validation(String::from("no held-out examples to estimate affinities")));
    }
    let mut labels = Tensor::zeros(&[n, t]);
    let mut preds_per_view = vec![Tensor::zeros(&[n, t]); m];
    for task in 0..t {
        let rows = &per_task_rows[task][..n];
        let feats = ds.features_at(task, rows)?;
        let view_preds = model.per_view_predictions(task, &feats)?;
        for (i, &row) in rows.iter().enumerate() {
            labels.set2(i, task, ds.tasks[task].labels[row]);
        }
        for (v, preds) in view_preds.iter().enumerate() {
            for (i, &p) in preds.iter().enumerate() {
                preds_per_view[v].set2(i, task, p);
            }
        }
    }
    let mut out = Vec::with_capacity(m);
    for v in 0..m {
        let ind = compute_indicators(&labels, &preds_per_view[v])?;
        let mut aff = task_affinity(&ind)?;
        aff.view = Some(v);
        out.push(aff);
    }
    Ok(out)
}

fn copy_params(
    model: &mut MultiViewModel,
    source: &LayerParams,
    name: &str,
) -> Result<LayerParams> {
    let weight = match source.weight {
        Some(id) => {
            let value = model.store.value(id).clone();
            Some(model.store.register(&format!("{name}/w"), value)?)
        }
        None => None,
    };
    let bias = match source.bias {
        Some(id) => {
            let value = model.store.value(id).clone();
            Some(model.store.register(&format!("{name}/b"), value)?)
        }
        None => None,
    };
    Ok(LayerParams { weight, bias })
}

/// Widens the layer at `depth` (from the output) into `decision.d` branches
/// with copied weights, in every view that has a layer there, and partitions
/// the fusion heads when `depth` is 0. Forward outputs are bit-identical
/// before and after, because every new branch starts as an exact copy.
pub fn split_layer(
    model: &mut MultiViewModel,
    depth: usize,
    decision: &SplitDecision,
) -> Result<()> {
    if depth != model.partitions.len() {
        return Err(Error::Structural(format!(
            "depth {depth} is not the next unsplit depth ({} splits done)",
            model.partitions.len()
        )));
    }
    let subjects: Vec<Vec<usize>> = if depth == 0 {
        (0..model.task_count).map(|t| vec![t]).collect()
    } else {
        model.partitions[depth - 1].clone()
    };
    if decision.assignment.labels.len() != subjects.len() {
        return Err(Error::Structural(format!(
            "assignment covers {} subjects, expected {}",
            decision.assignment.labels.len(),
            subjects.len()
        )));
    }
    if decision.d > subjects.len() {
        return Err(Error::Structural(format!(
            "cannot split depth {depth} into {} branches from {} subjects",
            decision.d,
            subjects.len()
        )));
    }

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); decision.d];
    for (subject, &cluster) in decision.assignment.labels.iter().enumerate() {
        if cluster >= decision.d {
            return Err(Error::Structural(format!(
                "cluster id {cluster} out of 0..{}",
                decision.d
            )));
        }
        groups[cluster].extend(subjects[subject].iter().copied());
    }
    for g in &mut groups {
        if g.is_empty() {
            return Err(Error::Structural(String::from("split produced an empty task group")));
        }
        g.sort_unstable();
    }
    groups.sort_by_key(|g| g[0]);

    if decision.d > 1 {
        for v in 0..model.stacks.len() {
            let len = model.stacks[v].layers.len();
            if len <= depth {
                continue;
            }
            let li = len - 1 - depth;
            if model.stacks[v].layers[li].branches.len() != 1 {
                return Err(Error::Structural(format!(
                    "view {v} layer {li} already has {} branches",
                    model.stacks[v].layers[li].branches.len()
                )));
            }
            let trunk = model.stacks[v].layers[li].branches[0].clone();
            let mut branches = vec![trunk.clone()];
            for g in 1..decision.d {
                let name = format!("v{v}/l{li}/d{depth}g{g}");
                branches.push(copy_params(model, &trunk, &name)?);
            }
            model.stacks[v].layers[li].branches = branches;
        }
        if depth == 0 {
            if model.heads.len() != 1 {
                return Err(Error::Structural(format!(
                    "expected one fusion head before the first split, found {}",
                    model.heads.len()
                )));
            }
            let old = model.heads[0].clone();
            let old_w = model.store.value(old.weights).clone();
            let old_b = model.store.value(old.bias).clone();
            let rows = old_w.shape()[0];
            let mut heads = Vec::with_capacity(decision.d);
            for (g, tasks) in groups.iter().enumerate() {
                let cols: Vec<usize> = tasks
                    .iter()
                    .map(|t| old.tasks.iter().position(|x| x == t).expect("head owns task"))
                    .collect();
                let mut w = Tensor::zeros(&[rows, cols.len()]);
                for r in 0..rows {
                    for (ci, &oc) in cols.iter().enumerate() {
                        w.set2(r, ci, old_w.at2(r, oc));
                    }
                }
                let b_data: Vec<f64> = cols.iter().map(|&oc| old_b.data()[oc]).collect();
                let weights = model.store.register(&format!("head/d0g{g}/w"), w)?;
                let bias = model.store.register(
                    &format!("head/d0g{g}/b"),
                    Tensor::new(vec![cols.len()], b_data)?,
                )?;
                heads.push(FusionHead {
                    weights,
                    bias,
                    activation: old.activation,
                    view_ranges: old.view_ranges.clone(),
                    tasks: tasks.clone(),
                });
            }
            model.heads = heads;
        }
    }

    model.partitions.push(groups);
    model.check_invariants()
}

/// Final training phase: epochs until the per-example validation loss has
/// improved by less than `min_delta` for `patience` consecutive epochs, or
/// the epoch cap is reached. Returns the epochs run and the last loss.
fn train_until_convergence(
    model: &mut MultiViewModel,
    ds: &MultiViewDataset,
    cfg: &TrainConfig,
) -> Result<(usize, f64)> {
    let reg = cfg.resolved_view_reg(ds.view_count())?;
    let per_task_rows: Vec<Vec<usize>> =
        (0..model.task_count).map(|t| train_indices(ds, t)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xf1a1f1a1);
    let mut best = f64::INFINITY;
    let mut streak = 0usize;
    let mut epochs = 0usize;
    let mut last = f64::NAN;
    for _ in 0..cfg.convergence.max_epochs {
        let loss = run_epoch(model, ds, cfg, &reg, &per_task_rows, &mut rng)?;
        if !loss.is_finite() {
            return Err(Error::Training {
                message: String::from("objective stopped being finite in the final phase"),
                last_finite_loss: last,
            });
        }
        last = loss;
        epochs += 1;
        let val = validation_loss(model, ds)?;
        if best - val < cfg.convergence.min_delta {
            streak += 1;
            if streak >= cfg.convergence.patience {
                break;
            }
        } else {
            streak = 0;
        }
        if val < best {
            best = val;
        }
    }
    Ok((epochs, validation_loss(model, ds)?))
}

/// Per-example squared-error loss on the held-out rows.
pub fn validation_loss(model: &MultiViewModel, ds: &MultiViewDataset) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for task in 0..model.task_count {
        let rows = eval_indices(ds, task);
        let feats = ds.features_at(task, &rows)?;
        let preds = model.predict_task(task, &feats)?;
        for (&row, p) in rows.iter().zip(&preds) {
            let d = p - ds.tasks[task].labels[row];
            total += 0.5 * d * d;
        }
        count += rows.len();
    }
    Ok(total / count.max(1) as f64)
}

/// Metrics over a dataset split (falling back to valid, then train, when a
/// task has no rows under the requested tag).
pub fn evaluate(model: &MultiViewModel, ds: &MultiViewDataset, split: Split) -> Result<MetricsReport> {
    let mut preds_all = Vec::with_capacity(model.task_count);
    let mut labels_all = Vec::with_capacity(model.task_count);
    for task in 0..model.task_count {
        let mut rows = ds.split_indices(task, split);
        if rows.is_empty() {
            rows = eval_indices(ds, task);
        }
        if rows.is_empty() {
            rows = train_indices(ds, task);
        }
        let feats = ds.features_at(task, &rows)?;
        preds_all.push(model.predict_task(task, &feats)?);
        labels_all.push(rows.iter().map(|&i| ds.tasks[task].labels[i]).collect::<Vec<f64>>());
    }
    let pairs: Vec<(&[f64], &[f64])> = preds_all
        .iter()
        .zip(&labels_all)
        .map(|(p, l)| (p.as_slice(), l.as_slice()))
        .collect();
    compute_metrics(&pairs)
}

/// Runs the whole procedure: `R` widening rounds guarded by the branch
/// count, then training to convergence.
pub fn deep_mtmv(ds: &MultiViewDataset, cfg: &TrainConfig) -> Result<DeepMtmvOutcome> {
    let mut model = build_model(ds, cfg)?;
    let max_depth = model.stacks.iter().map(|s| s.layers.len()).max().unwrap_or(0);
    let mut rounds: Vec<RoundRecord> = Vec::new();
    let mut b = model.task_count;
    let mut round = 1usize;
    let mut depth = 0usize;
    while round <= cfg.rounds && b > 1 && depth < max_depth {
        let metrics = train_round(&mut model, ds, cfg, cfg.epochs_per_round, round as u64)
            .map_err(|e| annotate_round(e, round))?;
        let task_affs = view_task_affinities(&model, ds).map_err(|e| annotate_round(e, round))?;
        let subjects: Vec<Vec<usize>> = if depth == 0 {
            (0..model.task_count).map(|t| vec![t]).collect()
        } else {
            model.partitions[depth - 1].clone()
        };
        let branch_affs: Vec<AffinityMatrix> = task_affs
            .iter()
            .map(|a| branch_affinity(a, &subjects))
            .collect::<Result<_>>()
            .map_err(|e| annotate_round(e, round))?;
        let weights = model.view_weights();
        let c = subjects.len();
        let params = SelectParams {
            l0: cfg.l0,
            alpha: cfg.alpha,
            p_t: cfg.p_t_override.unwrap_or(depth as u32),
            d_range: cfg.d_range.unwrap_or((1, c.min(5))),
            seed: cfg.seed.wrapping_add(round as u64),
            lambda_scale: cfg.lambda_scale,
            ..SelectParams::default()
        };
        let decision = select_branching(&branch_affs, &weights.shares, &params)
            .map_err(|e| annotate_round(e, round))?;
        split_layer(&mut model, depth, &decision).map_err(|e| annotate_round(e, round))?;
        rounds.push(RoundRecord {
            round,
            depth,
            chosen_d: decision.d,
            candidates: decision.candidates.iter().map(|c| (c.d, c.loss)).collect(),
            assignment: decision.assignment.labels.clone(),
            partition: model.partitions[depth].clone(),
            view_weights_raw: weights.raw.clone(),
            view_shares: weights.shares.clone(),
            metrics,
        });
        b = decision.d;
        round += 1;
        depth += 1;
    }
    let (epochs, final_val_loss) = train_until_convergence(&mut model, ds, cfg)?;
    let report = evaluate(&model, ds, Split::Test)?;
    Ok(DeepMtmvOutcome {
        model,
        rounds,
        final_metrics: FinalMetrics { report, final_val_loss, epochs },
    })
}

fn annotate_round(e: Error, round: usize) -> Error {
    match e {
        Error::Training { message, last_finite_loss } => Error::Training {
            message: format!("round {round}: {message}"),
            last_finite_loss,
        },
        Error::Structural(m) => Error::Structural(format!("round {round}: {m}")),
        Error::Numeric(m) => Error::Numeric(format!("round {round}: {m}")),
        Error::Validation(m) => Error::Validation(format!("round {round}: {m}")),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::ClusterAssignment;
    use crate::datagen::{gen_synthetic, PlantedSpec};

    fn toy_dataset(seed: u64) -> MultiViewDataset {
        let spec = PlantedSpec {
            task_groups: vec![vec![0, 1], vec![2, 3]],
            signal: vec![1.0, 1.0],
            noise: 0.3,
            label_noise: 0.1,
            seed,
        };
        gen_synthetic(
            &spec,
            60,
            &[(Modality::Vector, vec![5]), (Modality::Vector, vec![4])],
        )
        .unwrap()
    }

    fn small_cfg(seed: u64) -> TrainConfig {
        let mut cfg = TrainConfig::with_seed(seed);
        cfg.epochs_per_round = 30;
        cfg.convergence.max_epochs = 30;
        cfg.view_plans = Some(vec![
            vec![LayerKind::Dense { width: 8, activation: Activation::Relu }],
            vec![LayerKind::Dense { width: 8, activation: Activation::Relu }],
        ]);
        cfg
    }

    #[test]
    fn zero_epochs_is_a_noop() {
        let ds = toy_dataset(1);
        let cfg = small_cfg(1);
        let mut model = build_model(&ds, &cfg).unwrap();
        let before: Vec<Tensor> =
            model.store.iter().map(|(_, _, v)| v.clone()).collect();
        let metrics = train_round(&mut model, &ds, &cfg, 0, 0).unwrap();
        assert!(metrics.loss_trajectory.is_empty());
        assert!(metrics.task_accuracy.is_empty());
        let after: Vec<Tensor> = model.store.iter().map(|(_, _, v)| v.clone()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn training_is_deterministic() {
        let ds = toy_dataset(2);
        let cfg = small_cfg(2);
        let mut m1 = build_model(&ds, &cfg).unwrap();
        let mut m2 = build_model(&ds, &cfg).unwrap();
        let r1 = train_round(&mut m1, &ds, &cfg, 10, 3).unwrap();
        let r2 = train_round(&mut m2, &ds, &cfg, 10, 3).unwrap();
        assert_eq!(r1.loss_trajectory, r2.loss_trajectory);
    }

    #[test]
    fn split_d1_is_bookkeeping_only() {
        let ds = toy_dataset(3);
        let cfg = small_cfg(3);
        let mut model = build_model(&ds, &cfg).unwrap();
        let params_before = model.store.len();
        let decision = SplitDecision {
            d: 1,
            assignment: ClusterAssignment { labels: vec![0; 4], d: 1 },
            loss: 0.0,
            candidates: vec![],
        };
        split_layer(&mut model, 0, &decision).unwrap();
        assert_eq!(model.store.len(), params_before);
        assert_eq!(model.partitions, vec![vec![vec![0, 1, 2, 3]]]);
        assert_eq!(model.heads.len(), 1);
    }

    #[test]
    fn split_preserves_forward_bit_exactly() {
        let ds = toy_dataset(4);
        let cfg = small_cfg(4);
        let mut model = build_model(&ds, &cfg).unwrap();
        let rows: Vec<usize> = (0..10).collect();
        let before: Vec<Vec<f64>> = (0..4)
            .map(|t| model.predict_task(t, &ds.features_at(t, &rows).unwrap()).unwrap())
            .collect();
        let decision = SplitDecision {
            d: 2,
            assignment: ClusterAssignment { labels: vec![0, 0, 1, 1], d: 2 },
            loss: 0.0,
            candidates: vec![],
        };
        split_layer(&mut model, 0, &decision).unwrap();
        for t in 0..4 {
            let after = model.predict_task(t, &ds.features_at(t, &rows).unwrap()).unwrap();
            assert_eq!(before[t], after, "task {t} drifted after split");
        }
    }

    #[test]
    fn deep_mtmv_r0_changes_no_structure() {
        let ds = toy_dataset(5);
        let mut cfg = small_cfg(5);
        cfg.rounds = 0;
        let out = deep_mtmv(&ds, &cfg).unwrap();
        assert!(out.rounds.is_empty());
        assert!(out.model.partitions.is_empty());
        assert_eq!(out.model.heads.len(), 1);
    }

    #[test]
    fn total_branches_never_decrease() {
        let ds = toy_dataset(6);
        let mut cfg = small_cfg(6);
        cfg.rounds = 1;
        cfg.epochs_per_round = 20;
        let mut model = build_model(&ds, &cfg).unwrap();
        let before = model.total_branches();
        let decision = SplitDecision {
            d: 2,
            assignment: ClusterAssignment { labels: vec![0, 1, 0, 1], d: 2 },
            loss: 0.0,
            candidates: vec![],
        };
        split_layer(&mut model, 0, &decision).unwrap();
        assert!(model.total_branches() > before);
    }
}
