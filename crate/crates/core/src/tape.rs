//! Reverse-mode differentiation over a linear tape.
//!
//! Every forward operation appends one node holding its output tensor and
//! enough structure to replay its local gradient rule. The tape is therefore
//! topologically ordered by construction and a single reverse sweep visits
//! each recorded operation exactly once. Parameters live outside the tape in
//! a [`ParamStore`]; `backward` accumulates their gradients there.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::params::{ParamId, ParamStore};
use crate::tensor::Tensor;

/// Handle to a recorded node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub usize);

/// Elementwise activation kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Param(ParamId),
    Dense { x: NodeId, w: NodeId, b: NodeId },
    Conv2d { x: NodeId, k: NodeId, b: NodeId, stride: usize },
    Conv1d { x: NodeId, k: NodeId, b: NodeId },
    Relu { x: NodeId },
    Sigmoid { x: NodeId },
    Concat { parts: Vec<NodeId> },
    Flatten { x: NodeId },
    SliceCols { x: NodeId, lo: usize, hi: usize },
    StitchRow { feats: Vec<NodeId>, mixing: NodeId, row: usize },
    Add { a: NodeId, b: NodeId },
    Scale { x: NodeId, c: f64 },
    SqDiffSum { pred: NodeId, target: NodeId },
    GroupNorm { parts: Vec<NodeId> },
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Recorded computation graph for one forward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + crate::fmath::exp(-x))
    } else {
        let e = crate::fmath::exp(x);
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    /// Records a constant leaf (input data, labels).
    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf)
    }

    /// Records a parameter leaf; its value is copied from the store.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        self.push(store.value(id).clone(), Op::Param(id))
    }

    /// `out[r][c] = sum_k x[r][k] * w[k][c] + b[c]`
    pub fn dense(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        if xv.rank() != 2 || wv.rank() != 2 {
            return Err(Error::Dimension(format!(
                "dense wants rank-2 input and weights, got {:?} and {:?}",
                xv.shape(),
                wv.shape()
            )));
        }
        let (n, p) = (xv.shape()[0], xv.shape()[1]);
        let (p2, q) = (wv.shape()[0], wv.shape()[1]);
        if p != p2 {
            return Err(Error::Dimension(format!(
                "dense inner dimensions disagree: input {:?} vs weights {:?}",
                xv.shape(),
                wv.shape()
            )));
        }
        if bv.shape() != [q] {
            return Err(Error::Dimension(format!(
                "dense bias shape {:?} does not match {q} output columns",
                bv.shape()
            )));
        }
        let mut out = Tensor::zeros(&[n, q]);
        {
            let (xd, wd, bd) = (xv.data(), wv.data(), bv.data());
            let od = out.data_mut();
            for i in 0..n {
                let orow = &mut od[i * q..(i + 1) * q];
                orow.copy_from_slice(bd);
                for k in 0..p {
                    let xik = xd[i * p + k];
                    if xik == 0.0 {
                        continue;
                    }
                    let wrow = &wd[k * q..(k + 1) * q];
                    for j in 0..q {
                        orow[j] += xik * wrow[j];
                    }
                }
            }
        }
        Ok(self.push(out, Op::Dense { x, w, b }))
    }

    /// Valid (no padding) 2-D cross-correlation with stride.
    ///
    /// Input `[n,c,h,w]`, kernels `[f,c,kh,kw]`, bias `[f]` -> `[n,f,h',w']`.
    pub fn conv2d(&mut self, x: NodeId, k: NodeId, b: NodeId, stride: usize) -> Result<NodeId> {
        let (xv, kv, bv) = (self.value(x), self.value(k), self.value(b));
        if xv.rank() != 4 || kv.rank() != 4 {
            return Err(Error::Dimension(format!(
                "conv2d wants rank-4 input and kernels, got {:?} and {:?}",
                xv.shape(),
                kv.shape()
            )));
        }
        if stride == 0 {
            return Err(Error::Config(format!("conv2d stride must be positive, got {stride}")));
        }
        let (n, c, h, w) = (xv.shape()[0], xv.shape()[1], xv.shape()[2], xv.shape()[3]);
        let (f, kc, kh, kw) = (kv.shape()[0], kv.shape()[1], kv.shape()[2], kv.shape()[3]);
        if kc != c {
            return Err(Error::Dimension(format!(
                "conv2d channel mismatch: input {:?} vs kernels {:?}",
                xv.shape(),
                kv.shape()
            )));
        }
        if kh > h || kw > w {
            return Err(Error::Dimension(format!(
                "conv2d kernel {kh}x{kw} larger than input {h}x{w}"
            )));
        }
        if bv.shape() != [f] {
            return Err(Error::Dimension(format!(
                "conv2d bias shape {:?} does not match {f} filters",
                bv.shape()
            )));
        }
        let ho = (h - kh) / stride + 1;
        let wo = (w - kw) / stride + 1;
        let mut out = Tensor::zeros(&[n, f, ho, wo]);
        {
            let (xd, kd, bd) = (xv.data(), kv.data(), bv.data());
            let od = out.data_mut();
            for ni in 0..n {
                for fi in 0..f {
                    for oy in 0..ho {
                        for ox in 0..wo {
                            let mut acc = bd[fi];
                            for ci in 0..c {
                                for ky in 0..kh {
                                    let iy = oy * stride + ky;
                                    let xbase = ((ni * c + ci) * h + iy) * w + ox * stride;
                                    let kbase = ((fi * c + ci) * kh + ky) * kw;
                                    for kx in 0..kw {
                                        acc += xd[xbase + kx] * kd[kbase + kx];
                                    }
                                }
                            }
                            od[((ni * f + fi) * ho + oy) * wo + ox] = acc;
                        }
                    }
                }
            }
        }
        Ok(self.push(out, Op::Conv2d { x, k, b, stride }))
    }

    /// 1-D convolution over the token axis; kernels span the full embedding.
    ///
    /// Input `[n,k,d]`, kernels `[f,ks,d]`, bias `[f]` -> `[n,f,k-ks+1]`.
    pub fn conv1d(&mut self, x: NodeId, k: NodeId, b: NodeId) -> Result<NodeId> {
        let (xv, kv, bv) = (self.value(x), self.value(k), self.value(b));
        if xv.rank() != 3 || kv.rank() != 3 {
            return Err(Error::Dimension(format!(
                "conv1d wants rank-3 input and kernels, got {:?} and {:?}",
                xv.shape(),
                kv.shape()
            )));
        }
        let (n, tokens, d) = (xv.shape()[0], xv.shape()[1], xv.shape()[2]);
        let (f, ks, kd) = (kv.shape()[0], kv.shape()[1], kv.shape()[2]);
        if kd != d {
            return Err(Error::Dimension(format!(
                "conv1d embedding width mismatch: input {:?} vs kernels {:?}",
                xv.shape(),
                kv.shape()
            )));
        }
        if ks > tokens {
            return Err(Error::Dimension(format!(
                "conv1d kernel span {ks} exceeds {tokens} tokens"
            )));
        }
        if bv.shape() != [f] {
            return Err(Error::Dimension(format!(
                "conv1d bias shape {:?} does not match {f} filters",
                bv.shape()
            )));
        }
        let ko = tokens - ks + 1;
        let mut out = Tensor::zeros(&[n, f, ko]);
        {
            let (xd, kd_, bd) = (xv.data(), kv.data(), bv.data());
            let od = out.data_mut();
            for ni in 0..n {
                for fi in 0..f {
                    for p in 0..ko {
                        let mut acc = bd[fi];
                        for q in 0..ks {
                            let xbase = (ni * tokens + p + q) * d;
                            let kbase = (fi * ks + q) * d;
                            for e in 0..d {
                                acc += xd[xbase + e] * kd_[kbase + e];
                            }
                        }
                        od[(ni * f + fi) * ko + p] = acc;
                    }
                }
            }
        }
        Ok(self.push(out, Op::Conv1d { x, k, b }))
    }

    /// Elementwise activation. Identity records nothing and returns `x`.
    pub fn activation(&mut self, x: NodeId, kind: Activation) -> NodeId {
        match kind {
            Activation::Identity => x,
            Activation::Relu => {
                let mut out = self.value(x).clone();
                for v in out.data_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
                self.push(out, Op::Relu { x })
            }
            Activation::Sigmoid => {
                let mut out = self.value(x).clone();
                for v in out.data_mut() {
                    *v = sigmoid(*v);
                }
                self.push(out, Op::Sigmoid { x })
            }
        }
    }

    /// Concatenates rank-2 parts along columns in argument order.
    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::Usage(String::from("concat of zero parts")));
        }
        if parts.len() == 1 {
            return Ok(parts[0]);
        }
        let n = self.value(parts[0]).shape()[0];
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let v = self.value(p);
            if v.rank() != 2 {
                return Err(Error::Dimension(format!(
                    "concat wants rank-2 parts, got {:?}",
                    v.shape()
                )));
            }
            if v.shape()[0] != n {
                return Err(Error::Dimension(format!(
                    "concat leading dimension mismatch: {n} vs {}",
                    v.shape()[0]
                )));
            }
            widths.push(v.shape()[1]);
        }
        let total: usize = widths.iter().sum();
        let mut out = Tensor::zeros(&[n, total]);
        {
            let od = out.data_mut();
            let mut col = 0;
            for (&p, &wd) in parts.iter().zip(&widths) {
                let pv = &self.nodes[p.0].value;
                for i in 0..n {
                    od[i * total + col..i * total + col + wd]
                        .copy_from_slice(&pv.data()[i * wd..(i + 1) * wd]);
                }
                col += wd;
            }
        }
        Ok(self.push(out, Op::Concat { parts: parts.to_vec() }))
    }

    /// Collapses all trailing dimensions: `[n, ...]` -> `[n, prod(...)]`.
    pub fn flatten(&mut self, x: NodeId) -> Result<NodeId> {
        let xv = self.value(x);
        if xv.rank() < 2 {
            return Err(Error::Dimension(format!(
                "flatten wants rank >= 2, got {:?}",
                xv.shape()
            )));
        }
        let n = xv.shape()[0];
        let rest = xv.numel() / n;
        let out = xv.reshaped(vec![n, rest])?;
        Ok(self.push(out, Op::Flatten { x }))
    }

    /// Column slice `[lo, hi)` of a rank-2 tensor.
    pub fn slice_cols(&mut self, x: NodeId, lo: usize, hi: usize) -> Result<NodeId> {
        let xv = self.value(x);
        if xv.rank() != 2 {
            return Err(Error::Dimension(format!(
                "slice_cols wants rank 2, got {:?}",
                xv.shape()
            )));
        }
        let (n, d) = (xv.shape()[0], xv.shape()[1]);
        if lo >= hi || hi > d {
            return Err(Error::Usage(format!("column range {lo}..{hi} out of 0..{d}")));
        }
        let w = hi - lo;
        let mut out = Tensor::zeros(&[n, w]);
        for i in 0..n {
            out.data_mut()[i * w..(i + 1) * w]
                .copy_from_slice(&self.nodes[x.0].value.data()[i * d + lo..i * d + hi]);
        }
        Ok(self.push(out, Op::SliceCols { x, lo, hi }))
    }

    /// One output view of a cross-stitch unit:
    /// `out = sum_u mixing[row][u] * feats[u]`, elementwise.
    pub fn cross_stitch_row(&mut self, feats: &[NodeId], mixing: NodeId, row: usize) -> Result<NodeId> {
        let m = feats.len();
        if m == 0 {
            return Err(Error::Usage(String::from("cross-stitch over zero views")));
        }
        let mv = self.value(mixing);
        if mv.shape() != [m, m] {
            return Err(Error::Dimension(format!(
                "mixing shape {:?} does not match {m} views",
                mv.shape()
            )));
        }
        if row >= m {
            return Err(Error::Usage(format!("stitch row {row} out of {m} views")));
        }
        let shape = self.value(feats[0]).shape().to_vec();
        for &fid in feats {
            if self.value(fid).shape() != shape.as_slice() {
                return Err(Error::Dimension(format!(
                    "cross-stitch feature shapes disagree: {:?} vs {:?}",
                    shape,
                    self.value(fid).shape()
                )));
            }
        }
        let mut out = Tensor::zeros(&shape);
        for (u, &fid) in feats.iter().enumerate() {
            let coef = self.nodes[mixing.0].value.data()[row * m + u];
            let fd = self.nodes[fid.0].value.data();
            for (o, v) in out.data_mut().iter_mut().zip(fd) {
                *o += coef * v;
            }
        }
        Ok(self.push(out, Op::StitchRow { feats: feats.to_vec(), mixing, row }))
    }

    /// Elementwise sum of two same-shape tensors.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::Dimension(format!(
                "add shape mismatch: {:?} vs {:?}",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        let mut out = self.value(a).clone();
        for (o, v) in out.data_mut().iter_mut().zip(self.nodes[b.0].value.data()) {
            *o += v;
        }
        Ok(self.push(out, Op::Add { a, b }))
    }

    /// Multiplication by a compile-time constant.
    pub fn scale(&mut self, x: NodeId, c: f64) -> NodeId {
        let mut out = self.value(x).clone();
        for v in out.data_mut() {
            *v *= c;
        }
        self.push(out, Op::Scale { x, c })
    }

    /// Scalar `sum((pred - target)^2)`.
    pub fn sq_diff_sum(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId> {
        if self.value(pred).shape() != self.value(target).shape() {
            return Err(Error::Dimension(format!(
                "sq_diff_sum shape mismatch: {:?} vs {:?}",
                self.value(pred).shape(),
                self.value(target).shape()
            )));
        }
        let mut acc = 0.0;
        for (p, t) in self.nodes[pred.0].value.data().iter().zip(self.nodes[target.0].value.data()) {
            let d = p - t;
            acc += d * d;
        }
        Ok(self.push(Tensor::scalar(acc), Op::SqDiffSum { pred, target }))
    }

    /// Scalar `sqrt(sum over parts of sum(x^2) + eps)` — the smoothed
    /// Euclidean norm of a parameter group.
    pub fn group_norm(&mut self, parts: &[NodeId], eps: f64) -> NodeId {
        let mut acc = eps;
        for &p in parts {
            for v in self.nodes[p.0].value.data() {
                acc += v * v;
            }
        }
        self.push(Tensor::scalar(crate::fmath::sqrt(acc)), Op::GroupNorm { parts: parts.to_vec() })
    }

    /// Reverse sweep from a scalar loss; parameter gradients accumulate in
    /// `store`. Call `store.zero_grads()` first when starting a fresh cycle.
    pub fn backward(&self, loss: NodeId, store: &mut ParamStore) -> Result<()> {
        if !self.value(loss).is_scalar() {
            return Err(Error::Usage(format!(
                "backward wants a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let grad = match grads[idx].take() {
                Some(g) => g,
                None => continue,
            };
            let op = self.nodes[idx].op.clone();
            let nodes = &self.nodes;
            match op {
                Op::Leaf => {}
                Op::Param(pid) => store.accumulate_grad(pid, &grad)?,
                Op::Dense { x, w, b } => {
                    let xv = &nodes[x.0].value;
                    let wv = &nodes[w.0].value;
                    let (n, p) = (xv.shape()[0], xv.shape()[1]);
                    let q = wv.shape()[1];
                    let gd = grad.data();
                    let mut dx = Tensor::zeros(&[n, p]);
                    let mut dw = Tensor::zeros(&[p, q]);
                    let mut db = Tensor::zeros(&[q]);
                    for i in 0..n {
                        let grow = &gd[i * q..(i + 1) * q];
                        for j in 0..q {
                            db.data_mut()[j] += grow[j];
                        }
                        for k in 0..p {
                            let xik = xv.data()[i * p + k];
                            let wrow = &wv.data()[k * q..(k + 1) * q];
                            let mut acc = 0.0;
                            for j in 0..q {
                                acc += grow[j] * wrow[j];
                                dw.data_mut()[k * q + j] += xik * grow[j];
                            }
                            dx.data_mut()[i * p + k] = acc;
                        }
                    }
                    accumulate(&mut grads, x, dx);
                    accumulate(&mut grads, w, dw);
                    accumulate(&mut grads, b, db);
                }
                Op::Conv2d { x, k, b, stride } => {
                    let xv = &nodes[x.0].value;
                    let kv = &nodes[k.0].value;
                    let (n, c, h, w) = (xv.shape()[0], xv.shape()[1], xv.shape()[2], xv.shape()[3]);
                    let (f, _, kh, kw) = (kv.shape()[0], kv.shape()[1], kv.shape()[2], kv.shape()[3]);
                    let (ho, wo) = (grad.shape()[2], grad.shape()[3]);
                    let mut dx = Tensor::zeros(xv.shape());
                    let mut dk = Tensor::zeros(kv.shape());
                    let mut db = Tensor::zeros(&[f]);
                    let gd = grad.data();
                    for ni in 0..n {
                        for fi in 0..f {
                            for oy in 0..ho {
                                for ox in 0..wo {
                                    let g = gd[((ni * f + fi) * ho + oy) * wo + ox];
                                    if g == 0.0 {
                                        continue;
                                    }
                                    db.data_mut()[fi] += g;
                                    for ci in 0..c {
                                        for ky in 0..kh {
                                            let iy = oy * stride + ky;
                                            let xbase = ((ni * c + ci) * h + iy) * w + ox * stride;
                                            let kbase = ((fi * c + ci) * kh + ky) * kw;
                                            for kx in 0..kw {
                                                dx.data_mut()[xbase + kx] += g * kv.data()[kbase + kx];
                                                dk.data_mut()[kbase + kx] += g * xv.data()[xbase + kx];
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                    accumulate(&mut grads, x, dx);
                    accumulate(&mut grads, k, dk);
                    accumulate(&mut grads, b, db);
                }
                Op::Conv1d { x, k, b } => {
                    let xv = &nodes[x.0].value;
                    let kv = &nodes[k.0].value;
                    let (n, tokens, d) = (xv.shape()[0], xv.shape()[1], xv.shape()[2]);
                    let (f, ks, _) = (kv.shape()[0], kv.shape()[1], kv.shape()[2]);
                    let ko = grad.shape()[2];
                    let mut dx = Tensor::zeros(xv.shape());
                    let mut dk = Tensor::zeros(kv.shape());
                    let mut db = Tensor::zeros(&[f]);
                    let gd = grad.data();
                    for ni in 0..n {
                        for fi in 0..f {
                            for p in 0..ko {
                                let g = gd[(ni * f + fi) * ko + p];
                                if g == 0.0 {
                                    continue;
                                }
                                db.data_mut()[fi] += g;
                                for q in 0..ks {
                                    let xbase = (ni * tokens + p + q) * d;
                                    let kbase = (fi * ks + q) * d;
                                    for e in 0..d {
                                        dx.data_mut()[xbase + e] += g * kv.data()[kbase + e];
                                        dk.data_mut()[kbase + e] += g * xv.data()[xbase + e];
                                    }
                                }
                            }
                        }
                    }
                    accumulate(&mut grads, x, dx);
                    accumulate(&mut grads, k, dk);
                    accumulate(&mut grads, b, db);
                }
                Op::Relu { x } => {
                    let xv = &nodes[x.0].value;
                    let mut dx = grad.clone();
                    for (dv, xv) in dx.data_mut().iter_mut().zip(xv.data()) {
                        if *xv <= 0.0 {
                            *dv = 0.0;
                        }
                    }
                    accumulate(&mut grads, x, dx);
                }
                Op::Sigmoid { x } => {
                    let sv = &nodes[idx].value;
                    let mut dx = grad.clone();
                    for (dv, s) in dx.data_mut().iter_mut().zip(sv.data()) {
                        *dv *= s * (1.0 - s);
                    }
                    accumulate(&mut grads, x, dx);
                }
                Op::Concat { parts } => {
                    let n = grad.shape()[0];
                    let total = grad.shape()[1];
                    let mut col = 0;
                    for &p in &parts {
                        let wd = nodes[p.0].value.shape()[1];
                        let mut dp = Tensor::zeros(&[n, wd]);
                        for i in 0..n {
                            dp.data_mut()[i * wd..(i + 1) * wd]
                                .copy_from_slice(&grad.data()[i * total + col..i * total + col + wd]);
                        }
                        col += wd;
                        accumulate(&mut grads, p, dp);
                    }
                }
                Op::Flatten { x } => {
                    let dx = grad.reshaped(nodes[x.0].value.shape().to_vec())?;
                    accumulate(&mut grads, x, dx);
                }
                Op::SliceCols { x, lo, hi } => {
                    let xv = &nodes[x.0].value;
                    let (n, d) = (xv.shape()[0], xv.shape()[1]);
                    let w = hi - lo;
                    let mut dx = Tensor::zeros(&[n, d]);
                    for i in 0..n {
                        dx.data_mut()[i * d + lo..i * d + hi]
                            .copy_from_slice(&grad.data()[i * w..(i + 1) * w]);
                    }
                    accumulate(&mut grads, x, dx);
                }
                Op::StitchRow { feats, mixing, row } => {
                    let m = feats.len();
                    let mut dmix = Tensor::zeros(&[m, m]);
                    for (u, &fid) in feats.iter().enumerate() {
                        let coef = nodes[mixing.0].value.data()[row * m + u];
                        let mut df = grad.clone();
                        for v in df.data_mut() {
                            *v *= coef;
                        }
                        let mut dot = 0.0;
                        for (g, fv) in grad.data().iter().zip(nodes[fid.0].value.data()) {
                            dot += g * fv;
                        }
                        dmix.data_mut()[row * m + u] = dot;
                        accumulate(&mut grads, fid, df);
                    }
                    accumulate(&mut grads, mixing, dmix);
                }
                Op::Add { a, b } => {
                    accumulate(&mut grads, a, grad.clone());
                    accumulate(&mut grads, b, grad);
                }
                Op::Scale { x, c } => {
                    let mut dx = grad;
                    for v in dx.data_mut() {
                        *v *= c;
                    }
                    accumulate(&mut grads, x, dx);
                }
                Op::SqDiffSum { pred, target } => {
                    let g = grad.data()[0];
                    let pv = &nodes[pred.0].value;
                    let tv = &nodes[target.0].value;
                    let mut dp = Tensor::zeros(pv.shape());
                    let mut dt = Tensor::zeros(tv.shape());
                    for ((dpv, dtv), (p, t)) in dp
                        .data_mut()
                        .iter_mut()
                        .zip(dt.data_mut().iter_mut())
                        .zip(pv.data().iter().zip(tv.data()))
                    {
                        let d = 2.0 * g * (p - t);
                        *dpv = d;
                        *dtv = -d;
                    }
                    accumulate(&mut grads, pred, dp);
                    accumulate(&mut grads, target, dt);
                }
                Op::GroupNorm { parts } => {
                    let g = grad.data()[0];
                    let norm = nodes[idx].value.data()[0];
                    for &p in &parts {
                        let pv = &nodes[p.0].value;
                        let mut dp = Tensor::zeros(pv.shape());
                        for (d, v) in dp.data_mut().iter_mut().zip(pv.data()) {
                            *d = g * v / norm;
                        }
                        accumulate(&mut grads, p, dp);
                    }
                }
            }
        }
        Ok(())
    }
}

fn accumulate(grads: &mut [Option<Tensor>], id: NodeId, delta: Tensor) {
    match &mut grads[id.0] {
        Some(g) => {
            for (gv, dv) in g.data_mut().iter_mut().zip(delta.data()) {
                *gv += dv;
            }
        }
        slot @ None => *slot = Some(delta),
    }
}

/// Builds the training objective
/// `0.5 * sum_j ||pred_j - target_j||^2 + sum_i lambda_i * ||W_i||`
/// where each view's norm is the smoothed Euclidean norm of all its weight
/// tensors concatenated into one vector.
pub fn objective(
    tape: &mut Tape,
    predictions: &[NodeId],
    targets: &[NodeId],
    view_weight_nodes: &[Vec<NodeId>],
    lambdas: &[f64],
) -> Result<NodeId> {
    if predictions.is_empty() {
        return Err(Error::Usage(String::from("objective wants at least one task")));
    }
    if predictions.len() != targets.len() {
        return Err(Error::Dimension(format!(
            "{} predictions vs {} label tensors",
            predictions.len(),
            targets.len()
        )));
    }
    if view_weight_nodes.len() != lambdas.len() {
        return Err(Error::Config(format!(
            "{} views vs {} regularizer weights",
            view_weight_nodes.len(),
            lambdas.len()
        )));
    }
    for (i, &l) in lambdas.iter().enumerate() {
        if l < 0.0 {
            return Err(Error::Config(format!("lambda for view {i} is negative ({l})")));
        }
    }
    let mut data_term: Option<NodeId> = None;
    for (&p, &t) in predictions.iter().zip(targets) {
        let sq = tape.sq_diff_sum(p, t)?;
        data_term = Some(match data_term {
            Some(acc) => tape.add(acc, sq)?,
            None => sq,
        });
    }
    let mut total = tape.scale(data_term.unwrap(), 0.5);
    for (nodes, &lambda) in view_weight_nodes.iter().zip(lambdas) {
        if lambda == 0.0 || nodes.is_empty() {
            continue;
        }
        let norm = tape.group_norm(nodes, crate::NORM_EPS);
        let scaled = tape.scale(norm, lambda);
        total = tape.add(total, scaled)?;
    }
    Ok(total)
}
