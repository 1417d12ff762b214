//! Shared oracles for integration tests. These stay independent of the
//! implementation paths they check: naive loops, central differences, and a
//! plain least-squares probe.

#![allow(dead_code)]

use mtmv_core::params::{ParamId, ParamStore};
use mtmv_core::tensor::Tensor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Naive triple-loop matrix multiply plus bias, the dense-layer oracle.
pub fn naive_dense(x: &Tensor, w: &Tensor, b: &Tensor) -> Tensor {
    let (n, p) = (x.shape()[0], x.shape()[1]);
    let q = w.shape()[1];
    let mut out = Tensor::zeros(&[n, q]);
    for i in 0..n {
        for j in 0..q {
            let mut acc = b.data()[j];
            for k in 0..p {
                acc += x.at2(i, k) * w.data()[k * q + j];
            }
            out.set2(i, j, acc);
        }
    }
    out
}

/// Direct-summation 2-D convolution oracle (valid, stride).
pub fn naive_conv2d(x: &Tensor, k: &Tensor, b: &Tensor, stride: usize) -> Tensor {
    let (n, c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (f, _, kh, kw) = (k.shape()[0], k.shape()[1], k.shape()[2], k.shape()[3]);
    let ho = (h - kh) / stride + 1;
    let wo = (w - kw) / stride + 1;
    let mut out = Tensor::zeros(&[n, f, ho, wo]);
    for ni in 0..n {
        for fi in 0..f {
            for oy in 0..ho {
                for ox in 0..wo {
                    let mut acc = b.data()[fi];
                    for ci in 0..c {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let xv = x.data()
                                    [((ni * c + ci) * h + oy * stride + ky) * w + ox * stride + kx];
                                let kv = k.data()[((fi * c + ci) * kh + ky) * kw + kx];
                                acc += xv * kv;
                            }
                        }
                    }
                    out.data_mut()[((ni * f + fi) * ho + oy) * wo + ox] = acc;
                }
            }
        }
    }
    out
}

/// Sliding-window 1-D convolution oracle.
pub fn naive_conv1d(x: &Tensor, k: &Tensor, b: &Tensor) -> Tensor {
    let (n, tokens, d) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (f, ks, _) = (k.shape()[0], k.shape()[1], k.shape()[2]);
    let ko = tokens - ks + 1;
    let mut out = Tensor::zeros(&[n, f, ko]);
    for ni in 0..n {
        for fi in 0..f {
            for p in 0..ko {
                let mut acc = b.data()[fi];
                for q in 0..ks {
                    for e in 0..d {
                        acc += x.data()[(ni * tokens + p + q) * d + e]
                            * k.data()[(fi * ks + q) * d + e];
                    }
                }
                out.data_mut()[(ni * f + fi) * ko + p] = acc;
            }
        }
    }
    out
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = rng.gen_range(lo..hi);
    }
    t
}

/// Guarded relative error: `|a - n| / max(|a|, |n|, 1)`.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

/// Central-difference gradient check over every component of every listed
/// parameter. `forward` must rebuild the graph and return the loss value.
/// Returns the worst relative error seen.
pub fn finite_diff_max_err(
    store: &mut ParamStore,
    params: &[ParamId],
    analytic: &[(ParamId, Tensor)],
    forward: &mut dyn FnMut(&ParamStore) -> f64,
    step: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for &pid in params {
        let grad = &analytic.iter().find(|(id, _)| *id == pid).expect("grad captured").1;
        let numel = store.value(pid).numel();
        for i in 0..numel {
            let orig = store.value(pid).data()[i];
            store.value_mut(pid).data_mut()[i] = orig + step;
            let fp = forward(store);
            store.value_mut(pid).data_mut()[i] = orig - step;
            let fm = forward(store);
            store.value_mut(pid).data_mut()[i] = orig;
            let numeric = (fp - fm) / (2.0 * step);
            let err = rel_err(grad.data()[i], numeric);
            if err > worst {
                worst = err;
            }
        }
    }
    worst
}

/// Least-squares linear probe: fits `features * w + c ~ 2y - 1` with ridge
/// damping and scores thresholded predictions on the same rows. An upper
/// bound on how much label signal a flattened view carries.
pub fn linear_probe_accuracy(features: &Tensor, labels: &[f64]) -> f64 {
    let n = features.shape()[0];
    let d: usize = features.shape()[1..].iter().product();
    let ridge = 1e-3;
    // Build normal equations on [features | 1].
    let dim = d + 1;
    let mut a = vec![0.0; dim * dim];
    let mut bvec = vec![0.0; dim];
    for r in 0..n {
        let row = &features.data()[r * d..(r + 1) * d];
        let y = 2.0 * labels[r] - 1.0;
        for i in 0..d {
            for j in 0..d {
                a[i * dim + j] += row[i] * row[j];
            }
            a[i * dim + d] += row[i];
            a[d * dim + i] += row[i];
            bvec[i] += row[i] * y;
        }
        a[d * dim + d] += 1.0;
        bvec[d] += y;
    }
    for i in 0..dim {
        a[i * dim + i] += ridge;
    }
    let w = solve_dense(&mut a, &mut bvec, dim);
    let mut correct = 0usize;
    for r in 0..n {
        let row = &features.data()[r * d..(r + 1) * d];
        let mut score = w[d];
        for i in 0..d {
            score += row[i] * w[i];
        }
        let hat = if score > 0.0 { 1.0 } else { 0.0 };
        if hat == labels[r] {
            correct += 1;
        }
    }
    correct as f64 / n as f64
}

/// Logistic-regression probe fit by plain gradient ascent; on (near-)
/// separable data this reaches the data's achievable accuracy, unlike the
/// least-squares probe which concedes a thin boundary band.
pub fn logistic_probe_accuracy(features: &Tensor, labels: &[f64]) -> f64 {
    let n = features.shape()[0];
    let d: usize = features.shape()[1..].iter().product();
    let mut w = vec![0.0; d + 1];
    let lr = 0.5 / n as f64;
    for _ in 0..500 {
        let mut grad = vec![0.0; d + 1];
        for r in 0..n {
            let row = &features.data()[r * d..(r + 1) * d];
            let mut s = w[d];
            for i in 0..d {
                s += w[i] * row[i];
            }
            let p = 1.0 / (1.0 + (-s).exp());
            let err = labels[r] - p;
            for i in 0..d {
                grad[i] += err * row[i];
            }
            grad[d] += err;
        }
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi += lr * gi;
        }
    }
    let mut correct = 0usize;
    for r in 0..n {
        let row = &features.data()[r * d..(r + 1) * d];
        let mut s = w[d];
        for i in 0..d {
            s += w[i] * row[i];
        }
        let hat = if s > 0.0 { 1.0 } else { 0.0 };
        if hat == labels[r] {
            correct += 1;
        }
    }
    correct as f64 / n as f64
}

/// Gaussian elimination with partial pivoting (oracle-grade, not fast).
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Vec<f64> {
    for col in 0..n {
        let mut pivot = col;
        for r in (col + 1)..n {
            if a[r * n + col].abs() > a[pivot * n + col].abs() {
                pivot = r;
            }
        }
        if pivot != col {
            for c in 0..n {
                a.swap(col * n + c, pivot * n + c);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for r in (col + 1)..n {
            let factor = a[r * n + col] / diag;
            for c in col..n {
                a[r * n + c] -= factor * a[col * n + c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in (r + 1)..n {
            acc -= a[r * n + c] * x[c];
        }
        x[r] = acc / a[r * n + r];
    }
    x
}
