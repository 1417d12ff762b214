//! Synthetic multi-view multi-task datasets with planted task clusters.
//!
//! All tasks observe the same underlying examples (each task contributes its
//! own binary labels for them), which is what makes task-affinity estimation
//! over a shared evaluation set possible. Tasks in the same planted group
//! share a latent direction per view; labels threshold the sum of per-view
//! latent scores, each scaled by that view's signal strength, so a view with
//! signal 0 carries no label information at all.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fmath;
use crate::nets::Modality;
use crate::tensor::Tensor;

/// Which portion of a task's examples a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Valid,
    Test,
}

/// Shape and modality of one view.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewMeta {
    pub modality: Modality,
    /// Per-sample dimensions.
    pub dims: Vec<usize>,
}

/// One task's rows: per-view features over the same examples, labels, tags.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskData {
    /// `features[v]` is `[n, dims...]` for view `v`.
    pub features: Vec<Tensor>,
    /// Binary labels, length `n`.
    pub labels: Vec<f64>,
    pub splits: Vec<Split>,
}

/// The full dataset: `m` views, `T` tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    pub views: Vec<ViewMeta>,
    pub tasks: Vec<TaskData>,
}

impl MultiViewDataset {
    pub fn view_count(&self) -> usize {
        self.views.len()
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    /// Checks the structural invariants: matching example counts and shapes
    /// across views, binary labels, and tags for every example.
    pub fn validate(&self) -> Result<()> {
        if self.views.is_empty() || self.tasks.is_empty() {
            return Err(Error::Validation(String::from("dataset needs at least one view and one task")));
        }
        for (j, task) in self.tasks.iter().enumerate() {
            if task.features.len() != self.views.len() {
                return Err(Error::Validation(format!(
                    "task {j} has {} feature tensors for {} views",
                    task.features.len(),
                    self.views.len()
                )));
            }
            let n = task.features[0].shape()[0];
            for (v, (feat, meta)) in task.features.iter().zip(&self.views).enumerate() {
                let expected: Vec<usize> =
                    core::iter::once(n).chain(meta.dims.iter().copied()).collect();
                if feat.shape() != expected.as_slice() {
                    return Err(Error::Validation(format!(
                        "task {j} view {v} features are {:?}, expected {:?}",
                        feat.shape(),
                        expected
                    )));
                }
            }
            if task.labels.len() != n || task.splits.len() != n {
                return Err(Error::Validation(format!(
                    "task {j} has {n} examples but {} labels and {} split tags",
                    task.labels.len(),
                    task.splits.len()
                )));
            }
            if task.labels.iter().any(|&l| l != 0.0 && l != 1.0) {
                return Err(Error::Validation(format!("task {j} labels are not binary")));
            }
        }
        Ok(())
    }

    /// Example indices of a task carrying the given split tag.
    pub fn split_indices(&self, task: usize, split: Split) -> Vec<usize> {
        self.tasks[task]
            .splits
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == split)
            .map(|(i, _)| i)
            .collect()
    }

    /// Per-view feature batches for the given rows of a task.
    pub fn features_at(&self, task: usize, indices: &[usize]) -> Result<Vec<Tensor>> {
        self.tasks[task].features.iter().map(|f| f.select_rows(indices)).collect()
    }

    /// `[n x 1]` label column for the given rows of a task.
    pub fn label_column(&self, task: usize, indices: &[usize]) -> Result<Tensor> {
        let data: Vec<f64> = indices.iter().map(|&i| self.tasks[task].labels[i]).collect();
        Tensor::new(vec![indices.len(), 1], data)
    }

    /// Restriction to the given views (renumbered in argument order).
    pub fn subset_views(&self, ids: &[usize]) -> Result<MultiViewDataset> {
        if ids.is_empty() {
            return Err(Error::Validation(String::from("view subset must be nonempty")));
        }
        let mut seen = vec![false; self.views.len()];
        for &id in ids {
            if id >= self.views.len() {
                return Err(Error::Validation(format!(
                    "view {id} out of 0..{}",
                    self.views.len()
                )));
            }
            if seen[id] {
                return Err(Error::Validation(format!("view {id} listed twice")));
            }
            seen[id] = true;
        }
        Ok(MultiViewDataset {
            views: ids.iter().map(|&id| self.views[id].clone()).collect(),
            tasks: self
                .tasks
                .iter()
                .map(|t| TaskData {
                    features: ids.iter().map(|&id| t.features[id].clone()).collect(),
                    labels: t.labels.clone(),
                    splits: t.splits.clone(),
                })
                .collect(),
        })
    }
}

/// Recipe for a planted-structure dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    /// Disjoint task groups covering `0..T`; same-group tasks share latent
    /// directions.
    pub task_groups: Vec<Vec<usize>>,
    /// Per-view signal strength in `[0, 1]`; 0 makes the view uninformative.
    pub signal: Vec<f64>,
    /// Feature noise standard deviation.
    pub noise: f64,
    /// Label noise standard deviation (within-group task diversity).
    pub label_noise: f64,
    pub seed: u64,
}

fn check_task_groups(groups: &[Vec<usize>]) -> Result<usize> {
    if groups.is_empty() {
        return Err(Error::Config(String::from("task_groups must be nonempty")));
    }
    let total: usize = groups.iter().map(|g| g.len()).sum();
    let mut seen = vec![false; total];
    for g in groups {
        if g.is_empty() {
            return Err(Error::Config(String::from("empty task group")));
        }
        for &t in g {
            if t >= total || seen[t] {
                return Err(Error::Config(format!(
                    "task_groups must be a disjoint cover of 0..{total}"
                )));
            }
            seen[t] = true;
        }
    }
    Ok(total)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Orthonormal directions via Gram-Schmidt on Gaussian draws.
fn orthonormal_directions(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> Result<Vec<Vec<f64>>> {
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut attempts = 0;
    while dirs.len() < count {
        attempts += 1;
        if attempts > count + 16 {
            return Err(Error::Numeric(format!(
                "could not draw {count} independent directions in dimension {dim}"
            )));
        }
        let mut v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
        for d in &dirs {
            let dot: f64 = v.iter().zip(d).map(|(a, b)| a * b).sum();
            for (vi, di) in v.iter_mut().zip(d) {
                *vi -= dot * di;
            }
        }
        let norm = fmath::sqrt(v.iter().map(|x| x * x).sum());
        if norm < 1e-9 {
            continue;
        }
        for vi in &mut v {
            *vi /= norm;
        }
        dirs.push(v);
    }
    Ok(dirs)
}

/// Generates a planted-cluster dataset; a pure function of its arguments.
///
/// All tasks share the same `n_per_task` examples; per view, each group's
/// latent score is embedded along that group's direction, and a task's label
/// thresholds `sum_i signal_i * score_i` plus per-task noise. Split tags are
/// a seeded 60/20/20 train/valid/test partition shared by every task.
pub fn gen_synthetic(
    spec: &PlantedSpec,
    n_per_task: usize,
    view_dims: &[(Modality, Vec<usize>)],
) -> Result<MultiViewDataset> {
    if n_per_task < 10 {
        return Err(Error::Config(format!("n_per_task must be at least 10, got {n_per_task}")));
    }
    let task_count = check_task_groups(&spec.task_groups)?;
    let group_count = spec.task_groups.len();
    if view_dims.is_empty() {
        return Err(Error::Config(String::from("at least one view is required")));
    }
    if spec.signal.len() != view_dims.len() {
        return Err(Error::Config(format!(
            "{} signal strengths for {} views",
            spec.signal.len(),
            view_dims.len()
        )));
    }
    for (i, &s) in spec.signal.iter().enumerate() {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Config(format!("signal for view {i} must be in [0,1], got {s}")));
        }
    }
    if spec.noise < 0.0 || spec.label_noise < 0.0 {
        return Err(Error::Config(String::from("noise levels must be nonnegative")));
    }
    let mut widths = Vec::with_capacity(view_dims.len());
    for (i, (modality, dims)) in view_dims.iter().enumerate() {
        let expected_rank = match modality {
            Modality::Vector => 1,
            Modality::Sequence1d => 2,
            Modality::Image2d => 3,
        };
        if dims.len() != expected_rank || dims.iter().any(|&d| d == 0) {
            return Err(Error::Config(format!(
                "view {i}: dims {dims:?} incompatible with {modality:?}"
            )));
        }
        let width: usize = dims.iter().product();
        if width < group_count {
            return Err(Error::Config(format!(
                "view {i}: {width} feature slots cannot host {group_count} orthogonal group directions"
            )));
        }
        widths.push(width);
    }

    let n = n_per_task;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Per view: group directions, latent scores, features.
    let mut scores: Vec<Vec<Vec<f64>>> = Vec::with_capacity(view_dims.len()); // [view][group][n]
    let mut features: Vec<Tensor> = Vec::with_capacity(view_dims.len());
    for (v, (_, dims)) in view_dims.iter().enumerate() {
        let width = widths[v];
        let dirs = orthonormal_directions(&mut rng, group_count, width)?;
        let z: Vec<Vec<f64>> =
            (0..group_count).map(|_| (0..n).map(|_| gaussian(&mut rng)).collect()).collect();
        let mut flat = vec![0.0; n * width];
        for row in 0..n {
            for c in 0..width {
                flat[row * width + c] = spec.noise * gaussian(&mut rng);
            }
            for g in 0..group_count {
                let zval = z[g][row];
                for c in 0..width {
                    flat[row * width + c] += zval * dirs[g][c];
                }
            }
        }
        let shape: Vec<usize> = core::iter::once(n).chain(dims.iter().copied()).collect();
        features.push(Tensor::new(shape, flat)?);
        scores.push(z);
    }

    // Labels per task threshold the signal-weighted latent sum.
    let mut labels_per_task: Vec<Vec<f64>> = vec![Vec::with_capacity(n); task_count];
    for (g, group) in spec.task_groups.iter().enumerate() {
        for &task in group {
            let column: Vec<f64> = (0..n)
                .map(|row| {
                    let mut acc = 0.0;
                    for v in 0..view_dims.len() {
                        acc += spec.signal[v] * scores[v][g][row];
                    }
                    acc += spec.label_noise * gaussian(&mut rng);
                    if acc > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            labels_per_task[task] = column;
        }
    }

    // Shared 60/20/20 split tags.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let train_end = (n * 6) / 10;
    let valid_end = train_end + (n * 2) / 10;
    let mut splits = vec![Split::Test; n];
    for (pos, &idx) in order.iter().enumerate() {
        splits[idx] = if pos < train_end {
            Split::Train
        } else if pos < valid_end {
            Split::Valid
        } else {
            Split::Test
        };
    }

    let tasks: Vec<TaskData> = (0..task_count)
        .map(|j| TaskData {
            features: features.clone(),
            labels: labels_per_task[j].clone(),
            splits: splits.clone(),
        })
        .collect();
    let views: Vec<ViewMeta> = view_dims
        .iter()
        .map(|(m, dims)| ViewMeta { modality: *m, dims: dims.clone() })
        .collect();
    let ds = MultiViewDataset { views, tasks };
    ds.validate()?;
    Ok(ds)
}

/// Parity split modes for image views.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityMode {
    /// Two views: even-index columns, odd-index columns.
    Two,
    /// Four views: (row parity x column parity) subsamples.
    Four,
}

/// Splits a `[n, c, h, w]` image batch into non-overlapping pixel-parity
/// views. Indices are 0-based: the first view takes columns 0, 2, 4, ...
pub fn extract_views_by_parity(images: &Tensor, mode: ParityMode) -> Result<Vec<Tensor>> {
    if images.rank() != 4 {
        return Err(Error::Dimension(format!(
            "parity extraction wants [n,c,h,w], got {:?}",
            images.shape()
        )));
    }
    let (n, c, h, w) = (images.shape()[0], images.shape()[1], images.shape()[2], images.shape()[3]);
    let subsample = |row_par: Option<usize>, col_par: usize| -> Tensor {
        let rows: Vec<usize> = match row_par {
            Some(p) => (0..h).filter(|r| r % 2 == p).collect(),
            None => (0..h).collect(),
        };
        let cols: Vec<usize> = (0..w).filter(|cc| cc % 2 == col_par).collect();
        let mut out = Tensor::zeros(&[n, c, rows.len(), cols.len()]);
        for ni in 0..n {
            for ci in 0..c {
                for (oy, &iy) in rows.iter().enumerate() {
                    for (ox, &ix) in cols.iter().enumerate() {
                        let src = ((ni * c + ci) * h + iy) * w + ix;
                        let dst = ((ni * c + ci) * rows.len() + oy) * cols.len() + ox;
                        out.data_mut()[dst] = images.data()[src];
                    }
                }
            }
        }
        out
    };
    match mode {
        ParityMode::Two => {
            if w < 2 {
                return Err(Error::Dimension(format!(
                    "two-view parity split needs width >= 2, got {w}"
                )));
            }
            Ok(vec![subsample(None, 0), subsample(None, 1)])
        }
        ParityMode::Four => {
            if h < 2 || w < 2 {
                return Err(Error::Dimension(format!(
                    "four-view parity split needs height and width >= 2, got {h}x{w}"
                )));
            }
            Ok(vec![
                subsample(Some(0), 0),
                subsample(Some(0), 1),
                subsample(Some(1), 0),
                subsample(Some(1), 1),
            ])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_view_spec(seed: u64, signal: (f64, f64)) -> PlantedSpec {
        PlantedSpec {
            task_groups: vec![vec![0, 1], vec![2, 3]],
            signal: vec![signal.0, signal.1],
            noise: 0.3,
            label_noise: 0.1,
            seed,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = two_view_spec(11, (1.0, 0.5));
        let dims = [(Modality::Vector, vec![6]), (Modality::Vector, vec![5])];
        let a = gen_synthetic(&spec, 40, &dims).unwrap();
        let b = gen_synthetic(&spec, 40, &dims).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn labels_balanced_enough_and_splits_cover() {
        let spec = two_view_spec(3, (1.0, 1.0));
        let dims = [(Modality::Vector, vec![6]), (Modality::Vector, vec![5])];
        let ds = gen_synthetic(&spec, 100, &dims).unwrap();
        let pos: usize = ds.tasks[0].labels.iter().map(|&l| l as usize).sum();
        assert!(pos > 20 && pos < 80, "labels too unbalanced: {pos}/100");
        assert_eq!(ds.split_indices(0, Split::Train).len(), 60);
        assert_eq!(ds.split_indices(0, Split::Valid).len(), 20);
        assert_eq!(ds.split_indices(0, Split::Test).len(), 20);
    }

    #[test]
    fn rejects_small_and_degenerate_inputs() {
        let spec = two_view_spec(0, (1.0, 1.0));
        let dims = [(Modality::Vector, vec![6]), (Modality::Vector, vec![5])];
        assert!(gen_synthetic(&spec, 5, &dims).is_err());
        let tiny = [(Modality::Vector, vec![1]), (Modality::Vector, vec![5])];
        assert!(matches!(gen_synthetic(&spec, 40, &tiny), Err(Error::Config(_))));
    }

    #[test]
    fn parity_two_view_columns() {
        // 1x1x2x4 image with column values [0,1,2,3] in both rows
        let img = Tensor::new(
            vec![1, 1, 2, 4],
            vec![0.0, 1.0, 2.0, 3.0, 0.0, 1.0, 2.0, 3.0],
        )
        .unwrap();
        let views = extract_views_by_parity(&img, ParityMode::Two).unwrap();
        assert_eq!(views[0].shape(), &[1, 1, 2, 2]);
        assert_eq!(views[0].data(), &[0.0, 2.0, 0.0, 2.0]);
        assert_eq!(views[1].data(), &[1.0, 3.0, 1.0, 3.0]);
    }

    #[test]
    fn parity_four_view_exhaustive_partition() {
        let img = Tensor::new(vec![1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let views = extract_views_by_parity(&img, ParityMode::Four).unwrap();
        assert_eq!(views.len(), 4);
        let mut seen: Vec<f64> = views.iter().flat_map(|v| v.data().iter().copied()).collect();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(seen, vec![1.0, 2.0, 3.0, 4.0]);
        for v in &views {
            assert_eq!(v.shape(), &[1, 1, 1, 1]);
        }
    }

    #[test]
    fn parity_reassembly_is_identity() {
        let data: Vec<f64> = (0..24).map(|v| v as f64).collect();
        let img = Tensor::new(vec![1, 2, 3, 4], data).unwrap();
        let views = extract_views_by_parity(&img, ParityMode::Two).unwrap();
        let (n, c, h, w) = (1, 2, 3, 4);
        let mut back = Tensor::zeros(&[n, c, h, w]);
        for (par, view) in views.iter().enumerate() {
            let vw = view.shape()[3];
            for ni in 0..n {
                for ci in 0..c {
                    for y in 0..h {
                        for x in 0..vw {
                            let dst = ((ni * c + ci) * h + y) * w + (2 * x + par);
                            back.data_mut()[dst] =
                                view.data()[((ni * c + ci) * h + y) * vw + x];
                        }
                    }
                }
            }
        }
        assert_eq!(back, img);
    }

    #[test]
    fn parity_rejects_too_small() {
        let img = Tensor::new(vec![1, 1, 1, 1], vec![0.0]).unwrap();
        assert!(extract_views_by_parity(&img, ParityMode::Two).is_err());
        assert!(extract_views_by_parity(&img, ParityMode::Four).is_err());
    }
}
