//! Task and branch affinities from prediction error margins.
//!
//! For each task and evaluation example, the error margin is the absolute
//! difference between the binary label and the predicted probability. An
//! indicator fires when an example's margin strictly exceeds that task's mean
//! margin; two tasks are affine when their indicators agree often. Branch
//! affinities aggregate task affinities with a mean-of-min rule and are the
//! input to the clustering stage.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// What the rows/columns of an affinity matrix index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subject {
    Tasks,
    Branches,
}

/// Which view an affinity matrix came from; `None` means fused/consensus.
pub type ViewTag = Option<usize>;

/// Symmetric matrix of pairwise affinities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    entries: Tensor,
    pub subject: Subject,
    pub view: ViewTag,
}

impl AffinityMatrix {
    /// Validates squareness, symmetry (1e-12) and the `[0, 1]` range.
    pub fn new(entries: Tensor, subject: Subject, view: ViewTag) -> Result<Self> {
        if entries.rank() != 2 || entries.shape()[0] != entries.shape()[1] {
            return Err(Error::Validation(format!(
                "affinity matrix must be square, got {:?}",
                entries.shape()
            )));
        }
        let n = entries.shape()[0];
        for i in 0..n {
            for j in 0..n {
                let v = entries.at2(i, j);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Validation(format!(
                        "affinity ({i},{j}) = {v} outside [0, 1]"
                    )));
                }
                if crate::fmath::abs(v - entries.at2(j, i)) > 1e-12 {
                    return Err(Error::Validation(format!(
                        "affinity matrix asymmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(AffinityMatrix { entries, subject, view })
    }

    pub fn dim(&self) -> usize {
        self.entries.shape()[0]
    }

    pub fn entries(&self) -> &Tensor {
        &self.entries
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries.at2(i, j)
    }
}

/// Per-task, per-example margins and indicator bits over one evaluation set.
#[derive(Debug, Clone)]
pub struct IndicatorStream {
    examples: usize,
    tasks: usize,
    /// Row-major `[examples x tasks]`, values 0 or 1.
    indicators: Vec<u8>,
    /// Row-major `[examples x tasks]` absolute margins.
    margins: Vec<f64>,
    /// Mean margin per task.
    mean_margins: Vec<f64>,
}

impl IndicatorStream {
    pub fn examples(&self) -> usize {
        self.examples
    }

    pub fn tasks(&self) -> usize {
        self.tasks
    }

    pub fn indicator(&self, example: usize, task: usize) -> u8 {
        self.indicators[example * self.tasks + task]
    }

    pub fn margin(&self, example: usize, task: usize) -> f64 {
        self.margins[example * self.tasks + task]
    }

    pub fn mean_margins(&self) -> &[f64] {
        &self.mean_margins
    }
}

/// Margins `|t - s|`, per-task means, and strict-inequality indicators.
///
/// `labels` and `predictions` are `[N x T]`; labels must be 0/1 and
/// predictions must lie in `[0, 1]`.
pub fn compute_indicators(labels: &Tensor, predictions: &Tensor) -> Result<IndicatorStream> {
    if labels.shape() != predictions.shape() {
        return Err(Error::Dimension(format!(
            "labels {:?} vs predictions {:?}",
            labels.shape(),
            predictions.shape()
        )));
    }
    if labels.rank() != 2 {
        return Err(Error::Dimension(format!(
            "indicator inputs must be [examples x tasks], got {:?}",
            labels.shape()
        )));
    }
    let (n, t) = (labels.shape()[0], labels.shape()[1]);
    for (idx, &l) in labels.data().iter().enumerate() {
        if l != 0.0 && l != 1.0 {
            return Err(Error::Validation(format!(
                "label at flat index {idx} is {l}, expected 0 or 1"
            )));
        }
    }
    for (idx, &p) in predictions.data().iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Validation(format!(
                "prediction at flat index {idx} is {p}, outside [0, 1]"
            )));
        }
    }
    let mut margins = vec![0.0; n * t];
    let mut mean_margins = vec![0.0; t];
    for i in 0..n {
        for j in 0..t {
            let m = crate::fmath::abs(labels.at2(i, j) - predictions.at2(i, j));
            margins[i * t + j] = m;
            mean_margins[j] += m;
        }
    }
    for m in &mut mean_margins {
        *m /= n as f64;
    }
    let mut indicators = vec![0u8; n * t];
    for i in 0..n {
        for j in 0..t {
            // Strict: a margin equal to the mean does not fire.
            if margins[i * t + j] > mean_margins[j] {
                indicators[i * t + j] = 1;
            }
        }
    }
    Ok(IndicatorStream { examples: n, tasks: t, indicators, margins, mean_margins })
}

/// `A(i,j) = E{ e_i e_j + (1-e_i)(1-e_j) }` — the empirical probability that
/// two tasks' indicators agree. Diagonals are exactly 1.
pub fn task_affinity(ind: &IndicatorStream) -> Result<AffinityMatrix> {
    if ind.examples == 0 {
        return Err(Error::Validation(String::from("empty indicator stream")));
    }
    let t = ind.tasks;
    let n = ind.examples;
    let mut entries = Tensor::zeros(&[t, t]);
    for i in 0..t {
        for j in i..t {
            let mut agree = 0u64;
            for e in 0..n {
                if ind.indicators[e * t + i] == ind.indicators[e * t + j] {
                    agree += 1;
                }
            }
            let a = agree as f64 / n as f64;
            entries.set2(i, j, a);
            entries.set2(j, i, a);
        }
    }
    AffinityMatrix::new(entries, Subject::Tasks, None)
}

fn check_partition(grouping: &[Vec<usize>], universe: usize) -> Result<()> {
    let mut seen = vec![false; universe];
    for (g, branch) in grouping.iter().enumerate() {
        if branch.is_empty() {
            return Err(Error::Validation(format!("branch {g} is empty")));
        }
        for &t in branch {
            if t >= universe {
                return Err(Error::Validation(format!(
                    "branch {g} references task {t} outside 0..{universe}"
                )));
            }
            if seen[t] {
                return Err(Error::Validation(format!("task {t} appears in two branches")));
            }
            seen[t] = true;
        }
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(Error::Validation(format!("task {missing} not covered by any branch")));
    }
    Ok(())
}

/// Branch affinity `A^f(k,l) = (A(k,l) + A(l,k)) / 2` with
/// `A(k,l) = mean_{i in k}( min_{j in l} A_task(i, j) )`.
pub fn branch_affinity(task_aff: &AffinityMatrix, grouping: &[Vec<usize>]) -> Result<AffinityMatrix> {
    check_partition(grouping, task_aff.dim())?;
    let b = grouping.len();
    let directed = |k: &[usize], l: &[usize]| -> f64 {
        let mut acc = 0.0;
        for &i in k {
            let mut m = f64::INFINITY;
            for &j in l {
                let v = task_aff.at(i, j);
                if v < m {
                    m = v;
                }
            }
            acc += m;
        }
        acc / k.len() as f64
    };
    let mut entries = Tensor::zeros(&[b, b]);
    for k in 0..b {
        for l in k..b {
            let kl = directed(&grouping[k], &grouping[l]);
            let lk = directed(&grouping[l], &grouping[k]);
            let fused = (kl + lk) / 2.0;
            entries.set2(k, l, fused);
            entries.set2(l, k, fused);
        }
    }
    AffinityMatrix::new(entries, Subject::Branches, task_aff.view)
}

/// A square matrix where some entries are unobserved.
#[derive(Debug, Clone)]
pub struct MaskedMatrix {
    pub entries: Tensor,
    /// Row-major observation mask, same length as `entries`.
    pub observed: Vec<bool>,
}

impl MaskedMatrix {
    /// Fully-observed wrapper around an affinity matrix.
    pub fn complete(aff: &AffinityMatrix) -> Self {
        MaskedMatrix {
            entries: aff.entries().clone(),
            observed: vec![true; aff.dim() * aff.dim()],
        }
    }
}

/// Fills unobserved entries of each view's matrix with the view-weight
/// weighted average of the entries observed at the same position in the
/// other views, then symmetrizes by averaging with the transpose.
pub fn impute_missing(
    views: &[MaskedMatrix],
    view_weights: &[f64],
    subject: Subject,
) -> Result<Vec<AffinityMatrix>> {
    if views.is_empty() {
        return Err(Error::Validation(String::from("no views to impute")));
    }
    if views.len() != view_weights.len() {
        return Err(Error::Validation(format!(
            "{} views vs {} weights",
            views.len(),
            view_weights.len()
        )));
    }
    let n = views[0].entries.shape()[0];
    for (v, m) in views.iter().enumerate() {
        if m.entries.rank() != 2 || m.entries.shape() != [n, n] {
            return Err(Error::Validation(format!(
                "view {v} matrix shape {:?}, expected [{n}, {n}]",
                m.entries.shape()
            )));
        }
        if m.observed.len() != n * n {
            return Err(Error::Validation(format!("view {v} mask length mismatch")));
        }
    }
    let mut out = Vec::with_capacity(views.len());
    for (v, m) in views.iter().enumerate() {
        let mut filled = m.entries.clone();
        for i in 0..n {
            for j in 0..n {
                if m.observed[i * n + j] {
                    continue;
                }
                let mut wsum = 0.0;
                let mut acc = 0.0;
                let mut count = 0usize;
                let mut plain = 0.0;
                for (u, other) in views.iter().enumerate() {
                    if u == v || !other.observed[i * n + j] {
                        continue;
                    }
                    let val = other.entries.at2(i, j);
                    wsum += view_weights[u];
                    acc += view_weights[u] * val;
                    plain += val;
                    count += 1;
                }
                if count == 0 {
                    return Err(Error::Validation(format!(
                        "entry ({i},{j}) missing in all views"
                    )));
                }
                // Zero total weight among observers degrades to a plain mean.
                let imputed = if wsum > 0.0 { acc / wsum } else { plain / count as f64 };
                filled.set2(i, j, imputed);
            }
        }
        // Restore symmetry; observed symmetric inputs pass through unchanged.
        let mut sym = filled.clone();
        for i in 0..n {
            for j in 0..n {
                sym.set2(i, j, (filled.at2(i, j) + filled.at2(j, i)) / 2.0);
            }
        }
        out.push(AffinityMatrix::new(sym, subject, Some(v))?);
    }
    Ok(out)
}
