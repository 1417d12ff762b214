//! Centroid co-regularized multi-view spectral clustering and branch-count
//! selection.
//!
//! Per view, a normalized graph Laplacian `D^{-1/2} A D^{-1/2}` is built from
//! the branch affinity matrix. The co-regularized objective
//! `sum_i tr(U_i' L_i U_i) + sum_i lambda_i tr(U_i U_i' U_c U_c')` is
//! maximized by alternating eigen-updates, the consensus embedding is seeded
//! from the most important view, and a seeded k-means over the consensus rows
//! yields the grouping. Branch counts are chosen by the split loss
//! `(d-1) * L0 * 2^p + alpha * separation`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::affinity::AffinityMatrix;
use crate::eigen::top_k_eigenvectors;
use crate::error::{Error, Result};
use crate::fmath;
use crate::tensor::{matmul, Tensor};

/// Orthonormal spectral embedding: `T x k` with `U'U = I`.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    pub u: Tensor,
    /// Source view, or `None` for the consensus/centroid embedding.
    pub view: Option<usize>,
}

impl SpectralEmbedding {
    /// Largest deviation of `U'U` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let ut = self.u.transposed().expect("embedding is rank 2");
        let gram = matmul(&ut, &self.u).expect("shapes agree");
        let k = gram.shape()[0];
        let mut worst = 0.0;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                let d = fmath::abs(gram.at2(i, j) - target);
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }
}

/// Result of grouping `subjects` items into `d` clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    /// `labels[s]` is the cluster of subject `s`, in `0..d`.
    pub labels: Vec<usize>,
    pub d: usize,
}

impl ClusterAssignment {
    /// Subjects per cluster, ordered by cluster id.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.d];
        for (s, &c) in self.labels.iter().enumerate() {
            groups[c].push(s);
        }
        groups
    }
}

/// `L = D^{-1/2} A D^{-1/2}` with `D` the diagonal of row sums.
pub fn normalized_laplacian(aff: &AffinityMatrix) -> Result<Tensor> {
    let n = aff.dim();
    let mut inv_sqrt = vec![0.0; n];
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            row_sum += aff.at(i, j);
        }
        if row_sum <= 0.0 {
            return Err(Error::Validation(format!(
                "subject {i} has zero affinity row sum; Laplacian undefined"
            )));
        }
        inv_sqrt[i] = 1.0 / fmath::sqrt(row_sum);
    }
    let mut l = Tensor::zeros(&[n, n]);
    for i in 0..n {
        for j in 0..n {
            l.set2(i, j, inv_sqrt[i] * aff.at(i, j) * inv_sqrt[j]);
        }
    }
    Ok(l)
}

/// Top-`k` eigenvector embedding of a symmetric matrix, sign-normalized.
pub fn spectral_embed(laplacian: &Tensor, k: usize) -> Result<SpectralEmbedding> {
    if laplacian.rank() != 2 || laplacian.shape()[0] != laplacian.shape()[1] {
        return Err(Error::Dimension(format!(
            "Laplacian must be square, got {:?}",
            laplacian.shape()
        )));
    }
    let t = laplacian.shape()[0];
    if k > t {
        return Err(Error::Config(format!("k = {k} exceeds {t} subjects")));
    }
    let u = top_k_eigenvectors(laplacian, k)?;
    Ok(SpectralEmbedding { u, view: None })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Lloyd's k-means over embedding rows.
///
/// Initialization is farthest-point from a seeded uniform start, every tie
/// breaks toward the smaller index, and the returned clusters are re-labeled
/// by ascending smallest member index, so the assignment is a pure function
/// of `(embedding, k, seed)`.
pub fn kmeans_rows(embedding: &Tensor, k: usize, seed: u64) -> Result<ClusterAssignment> {
    if embedding.rank() != 2 {
        return Err(Error::Dimension(format!(
            "k-means wants a rank-2 embedding, got {:?}",
            embedding.shape()
        )));
    }
    let t = embedding.shape()[0];
    let dim = embedding.shape()[1];
    if k < 1 {
        return Err(Error::Config(String::from("cluster count must be at least 1")));
    }
    if k > t {
        return Err(Error::Config(format!("cluster count {k} exceeds {t} rows")));
    }
    let row = |i: usize| -> &[f64] { &embedding.data()[i * dim..(i + 1) * dim] };

    // Farthest-point initialization.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut center_rows: Vec<usize> = vec![rng.gen_range(0..t)];
    while center_rows.len() < k {
        let mut best_idx = usize::MAX;
        let mut best_dist = -1.0;
        for i in 0..t {
            if center_rows.contains(&i) {
                continue;
            }
            let d = center_rows.iter().map(|&c| sq_dist(row(i), row(c))).fold(f64::INFINITY, f64::min);
            if d > best_dist {
                best_dist = d;
                best_idx = i;
            }
        }
        center_rows.push(best_idx);
    }
    let mut centers: Vec<Vec<f64>> = center_rows.iter().map(|&i| row(i).to_vec()).collect();

    let mut labels = vec![0usize; t];
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..t {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(row(i), center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        // Re-seed empty clusters with the row farthest from its centroid.
        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far_idx = usize::MAX;
            let mut far_d = -1.0;
            for i in 0..t {
                if counts[labels[i]] < 2 {
                    continue;
                }
                let d = sq_dist(row(i), &centers[labels[i]]);
                if d > far_d {
                    far_d = d;
                    far_idx = i;
                }
            }
            counts[labels[far_idx]] -= 1;
            labels[far_idx] = c;
            counts[c] = 1;
            changed = true;
        }
        if !changed {
            break;
        }
        for center in &mut centers {
            center.iter_mut().for_each(|v| *v = 0.0);
        }
        let mut sizes = vec![0usize; k];
        for i in 0..t {
            sizes[labels[i]] += 1;
            for (cv, xv) in centers[labels[i]].iter_mut().zip(row(i)) {
                *cv += xv;
            }
        }
        for (center, &sz) in centers.iter_mut().zip(&sizes) {
            center.iter_mut().for_each(|v| *v /= sz as f64);
        }
    }

    // Relabel by ascending smallest member index.
    let mut first_member = vec![usize::MAX; k];
    for (i, &l) in labels.iter().enumerate() {
        if first_member[l] == usize::MAX {
            first_member[l] = i;
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&c| first_member[c]);
    let mut remap = vec![0usize; k];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    let labels: Vec<usize> = labels.into_iter().map(|l| remap[l]).collect();
    Ok(ClusterAssignment { labels, d: k })
}

/// Output of [`coreg_cluster`].
#[derive(Debug, Clone)]
pub struct CoregOutcome {
    pub view_embeddings: Vec<SpectralEmbedding>,
    pub centroid: SpectralEmbedding,
    pub assignment: ClusterAssignment,
    /// Objective value after initialization and after every iteration.
    pub objective_trace: Vec<f64>,
}

fn coreg_objective(laplacians: &[Tensor], lambdas: &[f64], us: &[Tensor], uc: &Tensor) -> f64 {
    let mut obj = 0.0;
    for (i, u) in us.iter().enumerate() {
        let ut = u.transposed().expect("rank 2");
        let lu = matmul(&laplacians[i], u).expect("shapes agree");
        let gram = matmul(&ut, &lu).expect("shapes agree");
        let k = gram.shape()[0];
        for d in 0..k {
            obj += gram.at2(d, d);
        }
        // tr(U_i U_i' U_c U_c') = ||U_i' U_c||_F^2
        let cross = matmul(&ut, uc).expect("shapes agree");
        let mut f2 = 0.0;
        for v in cross.data() {
            f2 += v * v;
        }
        obj += lambdas[i] * f2;
    }
    obj
}

/// `M + w * (U U')`, used for the co-regularized eigen-updates.
fn add_scaled_gram(base: &Tensor, u: &Tensor, w: f64) -> Tensor {
    let t = base.shape()[0];
    let k = u.shape()[1];
    let mut out = base.clone();
    for i in 0..t {
        for j in 0..t {
            let mut acc = 0.0;
            for c in 0..k {
                acc += u.at2(i, c) * u.at2(j, c);
            }
            let v = out.at2(i, j) + w * acc;
            out.set2(i, j, v);
        }
    }
    out
}

/// Alternating maximization of the co-regularized spectral objective.
///
/// The consensus embedding starts from the view with the largest weight;
/// each iteration recomputes every view's embedding from
/// `L_i + lambda_i U_c U_c'` and then the consensus from
/// `sum_i lambda_i U_i U_i'`. With all weights zero the consensus stays at
/// its initialization, which makes the single-view case collapse exactly to
/// `spectral_embed` + `kmeans_rows`.
pub fn coreg_cluster(
    laplacians: &[Tensor],
    lambdas: &[f64],
    k: usize,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> Result<CoregOutcome> {
    if laplacians.is_empty() {
        return Err(Error::Validation(String::from("no views to cluster")));
    }
    if laplacians.len() != lambdas.len() {
        return Err(Error::Config(format!(
            "{} Laplacians vs {} weights",
            laplacians.len(),
            lambdas.len()
        )));
    }
    let t = laplacians[0].shape()[0];
    for (i, l) in laplacians.iter().enumerate() {
        if l.rank() != 2 || l.shape() != [t, t] {
            return Err(Error::Dimension(format!(
                "view {i} Laplacian shape {:?}, expected [{t}, {t}]",
                l.shape()
            )));
        }
    }
    for (i, &l) in lambdas.iter().enumerate() {
        if l < 0.0 {
            return Err(Error::Config(format!("lambda for view {i} is negative ({l})")));
        }
    }
    if k > t {
        return Err(Error::Config(format!("k = {k} exceeds {t} subjects")));
    }

    let mut us: Vec<Tensor> = Vec::with_capacity(laplacians.len());
    for l in laplacians {
        us.push(top_k_eigenvectors(l, k)?);
    }
    // "Most important view" seeds the consensus; ties go to the first view.
    let mut best_view = 0;
    for (i, &l) in lambdas.iter().enumerate() {
        if l > lambdas[best_view] {
            best_view = i;
        }
    }
    let mut uc = us[best_view].clone();
    let lambda_total: f64 = lambdas.iter().sum();

    let mut trace = vec![coreg_objective(laplacians, lambdas, &us, &uc)];
    for iter in 0..max_iters {
        for i in 0..laplacians.len() {
            let m = add_scaled_gram(&laplacians[i], &uc, lambdas[i]);
            us[i] = top_k_eigenvectors(&m, k)?;
        }
        if lambda_total > 0.0 {
            let mut consensus_src = Tensor::zeros(&[t, t]);
            for (i, u) in us.iter().enumerate() {
                consensus_src = add_scaled_gram(&consensus_src, u, lambdas[i]);
            }
            uc = top_k_eigenvectors(&consensus_src, k)?;
        }
        let obj = coreg_objective(laplacians, lambdas, &us, &uc);
        let prev = *trace.last().expect("trace nonempty");
        if obj < prev - 1e-9 {
            return Err(Error::Numeric(format!(
                "co-regularization objective decreased at iteration {iter}: {prev} -> {obj}"
            )));
        }
        trace.push(obj);
        if obj - prev < tol {
            break;
        }
    }

    let assignment = kmeans_rows(&uc, k, seed)?;
    let view_embeddings = us
        .into_iter()
        .enumerate()
        .map(|(i, u)| SpectralEmbedding { u, view: Some(i) })
        .collect();
    Ok(CoregOutcome {
        view_embeddings,
        centroid: SpectralEmbedding { u: uc, view: None },
        assignment,
        objective_trace: trace,
    })
}

/// Mean over clusters of `1 - mean_{k in cluster}(min_{l != k in cluster} A(k,l))`.
///
/// Self-pairs are excluded from the inner min. A singleton cluster has no
/// intra-cluster support, so its empty min counts as 0 and the cluster
/// contributes the full penalty of 1; this makes shattering subjects into
/// singletons expensive rather than free, which is what lets the structural
/// term of the split loss select moderate branch counts.
pub fn separation_penalty(assignment: &ClusterAssignment, branch_aff: &AffinityMatrix) -> Result<f64> {
    if assignment.labels.len() != branch_aff.dim() {
        return Err(Error::Validation(format!(
            "assignment covers {} subjects, affinity has {}",
            assignment.labels.len(),
            branch_aff.dim()
        )));
    }
    let groups = assignment.groups();
    let mut total = 0.0;
    for members in &groups {
        if members.is_empty() {
            return Err(Error::Validation(String::from("assignment contains an empty cluster")));
        }
        let mut mean_min = 0.0;
        for &k in members {
            let mut m = f64::INFINITY;
            for &l in members {
                if l == k {
                    continue;
                }
                let v = branch_aff.at(k, l);
                if v < m {
                    m = v;
                }
            }
            if !m.is_finite() {
                m = 0.0; // singleton: empty min
            }
            mean_min += m;
        }
        mean_min /= members.len() as f64;
        total += 1.0 - mean_min;
    }
    Ok(total / groups.len() as f64)
}

/// Per-candidate split loss.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateLoss {
    pub d: usize,
    pub loss: f64,
    pub assignment: ClusterAssignment,
}

/// Chosen branch count with its assignment and the full candidate table.
#[derive(Debug, Clone)]
pub struct SplitDecision {
    pub d: usize,
    pub assignment: ClusterAssignment,
    pub loss: f64,
    pub candidates: Vec<CandidateLoss>,
}

/// Knobs for [`select_branching`].
#[derive(Debug, Clone)]
pub struct SelectParams {
    pub l0: f64,
    pub alpha: f64,
    /// Depth exponent in `2^{p_t}`.
    pub p_t: u32,
    /// Inclusive candidate range; clamped to the subject count.
    pub d_range: (usize, usize),
    pub seed: u64,
    /// Scales normalized view shares into co-regularization weights.
    pub lambda_scale: f64,
    pub coreg_max_iters: usize,
    pub coreg_tol: f64,
}

impl Default for SelectParams {
    fn default() -> Self {
        SelectParams {
            l0: 0.01,
            alpha: 1.0,
            p_t: 0,
            d_range: (1, 5),
            seed: 0,
            lambda_scale: 0.5,
            coreg_max_iters: 50,
            coreg_tol: 1e-7,
        }
    }
}

/// Normalizes nonnegative weights into shares; all-zero becomes uniform.
pub fn normalized_shares(weights: &[f64]) -> Vec<f64> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        vec![1.0 / weights.len() as f64; weights.len()]
    } else {
        weights.iter().map(|w| w / sum).collect()
    }
}

/// Evaluates the split loss `(d-1) * L0 * 2^{p_t} + alpha * separation` for
/// every candidate `d` and returns the argmin (ties break toward smaller d).
///
/// One clustering seed is shared across candidates so the loss table is
/// comparable row to row. The separation penalty is read off the
/// share-weighted consensus of the per-view branch affinities.
pub fn select_branching(
    branch_affs: &[AffinityMatrix],
    view_weights: &[f64],
    params: &SelectParams,
) -> Result<SplitDecision> {
    if branch_affs.is_empty() {
        return Err(Error::Validation(String::from("no branch affinity matrices")));
    }
    if branch_affs.len() != view_weights.len() {
        return Err(Error::Validation(format!(
            "{} affinity matrices vs {} view weights",
            branch_affs.len(),
            view_weights.len()
        )));
    }
    if params.l0 < 0.0 || params.alpha < 0.0 {
        return Err(Error::Config(String::from("l0 and alpha must be nonnegative")));
    }
    let c = branch_affs[0].dim();
    for (i, a) in branch_affs.iter().enumerate() {
        if a.dim() != c {
            return Err(Error::Validation(format!(
                "view {i} affinity is {}x{}, expected {c}x{c}",
                a.dim(),
                a.dim()
            )));
        }
    }
    let lo = params.d_range.0.max(1);
    let hi = params.d_range.1.min(c);
    if lo > hi {
        return Err(Error::Config(format!(
            "empty candidate range after clamping to 1..={c}: {:?}",
            params.d_range
        )));
    }

    let shares = normalized_shares(view_weights);
    let lambdas: Vec<f64> = shares.iter().map(|s| s * params.lambda_scale).collect();

    let mut laplacians = Vec::with_capacity(branch_affs.len());
    for aff in branch_affs {
        laplacians.push(normalized_laplacian(aff)?);
    }

    let mut consensus = Tensor::zeros(&[c, c]);
    for (share, aff) in shares.iter().zip(branch_affs) {
        for i in 0..c {
            for j in 0..c {
                let v = consensus.at2(i, j) + share * aff.at(i, j);
                consensus.set2(i, j, v);
            }
        }
    }
    let consensus = AffinityMatrix::new(consensus, branch_affs[0].subject, None)?;

    let structure_unit = params.l0 * fmath::powi(2.0, params.p_t as i32);
    let mut candidates: Vec<CandidateLoss> = Vec::new();
    for d in lo..=hi {
        let outcome = coreg_cluster(
            &laplacians,
            &lambdas,
            d,
            params.coreg_max_iters,
            params.coreg_tol,
            params.seed,
        )?;
        let sep = separation_penalty(&outcome.assignment, &consensus)?;
        let loss = (d as f64 - 1.0) * structure_unit + params.alpha * sep;
        candidates.push(CandidateLoss { d, loss, assignment: outcome.assignment });
    }

    let mut best = 0usize;
    for (i, cand) in candidates.iter().enumerate() {
        if cand.loss < candidates[best].loss {
            best = i;
        }
    }
    Ok(SplitDecision {
        d: candidates[best].d,
        assignment: candidates[best].assignment.clone(),
        loss: candidates[best].loss,
        candidates,
    })
}

fn comb2(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two labelings of the same items; 1.0 means
/// identical partitions, 0.0 is chance-level agreement.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same items");
    let n = a.len() as u64;
    if n == 0 {
        return 1.0;
    }
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![0u64; ka * kb];
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for (&x, &y) in a.iter().zip(b) {
        table[x * kb + y] += 1;
        rows[x] += 1;
        cols[y] += 1;
    }
    let sum_cells: f64 = table.iter().map(|&c| comb2(c)).sum();
    let sum_rows: f64 = rows.iter().map(|&c| comb2(c)).sum();
    let sum_cols: f64 = cols.iter().map(|&c| comb2(c)).sum();
    let total = comb2(n);
    let expected = sum_rows * sum_cols / total;
    let max_index = (sum_rows + sum_cols) / 2.0;
    if fmath::abs(max_index - expected) < 1e-15 {
        return 1.0;
    }
    (sum_cells - expected) / (max_index - expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affinity::Subject;

    fn aff(rows: &[Vec<f64>]) -> AffinityMatrix {
        AffinityMatrix::new(Tensor::from_rows(rows).unwrap(), Subject::Branches, None).unwrap()
    }

    #[test]
    fn laplacian_of_all_ones() {
        let a = aff(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        let l = normalized_laplacian(&a).unwrap();
        for v in l.data() {
            assert!((v - 0.5).abs() < 1e-15);
        }
        let vals = crate::eigen::eigenvalues_desc(&l).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!(vals[1].abs() < 1e-12);
    }

    #[test]
    fn laplacian_of_identity_is_identity() {
        let a = aff(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let l = normalized_laplacian(&a).unwrap();
        assert_eq!(l.data(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn laplacian_preserves_block_structure() {
        let a = aff(&[
            vec![1.0, 0.8, 0.0, 0.0],
            vec![0.8, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.6],
            vec![0.0, 0.0, 0.6, 1.0],
        ]);
        let l = normalized_laplacian(&a).unwrap();
        for i in 0..2 {
            for j in 2..4 {
                assert_eq!(l.at2(i, j), 0.0);
                assert_eq!(l.at2(j, i), 0.0);
            }
        }
    }

    #[test]
    fn laplacian_rejects_zero_row() {
        let t = Tensor::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let a = AffinityMatrix::new(t, Subject::Tasks, None).unwrap();
        match normalized_laplacian(&a) {
            Err(Error::Validation(m)) => assert!(m.contains("subject 0"), "{m}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn spectral_embed_identity_laplacian() {
        let l = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let e = spectral_embed(&l, 2).unwrap();
        assert!(e.orthonormality_defect() < 1e-8);
        // trace objective equals 2 for any orthonormal pair
        let ut = e.u.transposed().unwrap();
        let tr: f64 = {
            let g = matmul(&ut, &matmul(&l, &e.u).unwrap()).unwrap();
            g.at2(0, 0) + g.at2(1, 1)
        };
        assert!((tr - 2.0).abs() < 1e-10);
    }

    #[test]
    fn spectral_embed_dominant_axis() {
        let l = Tensor::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let e = spectral_embed(&l, 1).unwrap();
        assert_eq!(e.u.data(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn spectral_embed_rejects_large_k() {
        let l = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(spectral_embed(&l, 3), Err(Error::Config(_))));
    }

    #[test]
    fn kmeans_forced_singletons() {
        let rows = Tensor::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let a = kmeans_rows(&rows, 3, 7).unwrap();
        assert_eq!(a.labels, vec![0, 1, 2]);
    }

    #[test]
    fn kmeans_duplicated_rows_share_cluster() {
        let rows = Tensor::from_rows(&[
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![9.0, 9.0],
            vec![9.0, 9.0],
        ])
        .unwrap();
        let a = kmeans_rows(&rows, 2, 3).unwrap();
        assert_eq!(a.labels[0], a.labels[1]);
        assert_eq!(a.labels[2], a.labels[3]);
        assert_ne!(a.labels[0], a.labels[2]);
        // relabeled by smallest member
        assert_eq!(a.labels[0], 0);
    }

    #[test]
    fn kmeans_bounds() {
        let rows = Tensor::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(kmeans_rows(&rows, 0, 0).is_err());
        assert!(kmeans_rows(&rows, 3, 0).is_err());
    }

    #[test]
    fn separation_penalty_cases() {
        // all intra-cluster affinities 1 -> penalty 0
        let a = aff(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        let assign = ClusterAssignment { labels: vec![0, 0], d: 1 };
        assert_eq!(separation_penalty(&assign, &a).unwrap(), 0.0);

        // pair with affinity 0.4 -> penalty 0.6
        let a = aff(&[vec![1.0, 0.4], vec![0.4, 1.0]]);
        let assign = ClusterAssignment { labels: vec![0, 0], d: 1 };
        assert!((separation_penalty(&assign, &a).unwrap() - 0.6).abs() < 1e-15);

        // singletons have no intra support and carry the full penalty
        let assign = ClusterAssignment { labels: vec![0, 1], d: 2 };
        assert_eq!(separation_penalty(&assign, &a).unwrap(), 1.0);

        // two clusters, each internally all-1 -> penalty 0
        let a = aff(&[
            vec![1.0, 1.0, 0.2, 0.2],
            vec![1.0, 1.0, 0.2, 0.2],
            vec![0.2, 0.2, 1.0, 1.0],
            vec![0.2, 0.2, 1.0, 1.0],
        ]);
        let assign = ClusterAssignment { labels: vec![0, 0, 1, 1], d: 2 };
        assert_eq!(separation_penalty(&assign, &a).unwrap(), 0.0);
    }

    #[test]
    fn select_branching_rejects_empty_range() {
        let a = aff(&[vec![1.0, 0.5], vec![0.5, 1.0]]);
        let params = SelectParams { d_range: (3, 5), ..SelectParams::default() };
        assert!(matches!(
            select_branching(&[a], &[1.0], &params),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn ari_basics() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 1, 0, 1], &[0, 0, 1, 1]) < 0.5, true);
        assert_eq!(adjusted_rand_index(&[0, 0, 0], &[0, 0, 0]), 1.0);
    }
}
