//! Central finite-difference verification of every differentiable operation
//! and of small composed networks, against the oracle in `common`.

mod common;

use common::{finite_diff_max_err, random_tensor};
use mtmv_core::params::{ParamId, ParamStore};
use mtmv_core::tape::{objective, Activation, Tape};
use mtmv_core::tensor::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-6;
const TOL: f64 = 1e-5;

fn capture_grads(store: &ParamStore, params: &[ParamId]) -> Vec<(ParamId, Tensor)> {
    params.iter().map(|&p| (p, store.grad(p).clone())).collect()
}

/// Runs a finite-difference check for a graph builder that maps the current
/// store to a scalar loss.
fn check(
    store: &mut ParamStore,
    params: &[ParamId],
    build: &mut dyn FnMut(&ParamStore, &mut Tape) -> mtmv_core::tape::NodeId,
) -> f64 {
    let mut tape = Tape::new();
    let loss = build(store, &mut tape);
    store.zero_grads();
    tape.backward(loss, store).unwrap();
    let analytic = capture_grads(store, params);
    let mut forward = |s: &ParamStore| {
        let mut t = Tape::new();
        let l = build(s, &mut t);
        t.value(l).scalar_value().unwrap()
    };
    finite_diff_max_err(store, params, &analytic, &mut forward, STEP)
}

#[test]
fn dense_gradients_three_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for (n, p, q) in [(1, 2, 3), (4, 3, 2), (2, 5, 5)] {
        let mut store = ParamStore::new();
        let w = store.register("w", random_tensor(&mut rng, &[p, q], -1.0, 1.0)).unwrap();
        let b = store.register("b", random_tensor(&mut rng, &[q], -0.5, 0.5)).unwrap();
        let x = random_tensor(&mut rng, &[n, p], -1.0, 1.0);
        let target = random_tensor(&mut rng, &[n, q], 0.0, 1.0);
        let err = check(&mut store, &[w, b], &mut |s, tape| {
            let xn = tape.input(x.clone());
            let wn = tape.param(s, w);
            let bn = tape.param(s, b);
            let y = tape.dense(xn, wn, bn).unwrap();
            let t = tape.input(target.clone());
            tape.sq_diff_sum(y, t).unwrap()
        });
        assert!(err < TOL, "dense {n}x{p}x{q}: max rel err {err}");
    }
}

#[test]
fn conv2d_gradients_three_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for (n, c, h, w, f, kh, kw, stride) in
        [(1, 1, 3, 3, 1, 2, 2, 1), (2, 2, 5, 4, 3, 2, 2, 1), (1, 2, 6, 6, 2, 3, 3, 2)]
    {
        let mut store = ParamStore::new();
        let k = store
            .register("k", random_tensor(&mut rng, &[f, c, kh, kw], -0.8, 0.8))
            .unwrap();
        let b = store.register("b", random_tensor(&mut rng, &[f], -0.3, 0.3)).unwrap();
        let x = random_tensor(&mut rng, &[n, c, h, w], -1.0, 1.0);
        let ho = (h - kh) / stride + 1;
        let wo = (w - kw) / stride + 1;
        let target = random_tensor(&mut rng, &[n, f, ho, wo], -0.5, 0.5);
        let err = check(&mut store, &[k, b], &mut |s, tape| {
            let xn = tape.input(x.clone());
            let kn = tape.param(s, k);
            let bn = tape.param(s, b);
            let y = tape.conv2d(xn, kn, bn, stride).unwrap();
            let t = tape.input(target.clone());
            tape.sq_diff_sum(y, t).unwrap()
        });
        assert!(err < TOL, "conv2d case: max rel err {err}");
    }
}

#[test]
fn conv1d_gradients_three_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for (n, tokens, d, f, ks) in [(1, 4, 2, 1, 2), (2, 6, 3, 2, 3), (3, 5, 2, 2, 1)] {
        let mut store = ParamStore::new();
        let k = store.register("k", random_tensor(&mut rng, &[f, ks, d], -0.8, 0.8)).unwrap();
        let b = store.register("b", random_tensor(&mut rng, &[f], -0.3, 0.3)).unwrap();
        let x = random_tensor(&mut rng, &[n, tokens, d], -1.0, 1.0);
        let target = random_tensor(&mut rng, &[n, f, tokens - ks + 1], -0.5, 0.5);
        let err = check(&mut store, &[k, b], &mut |s, tape| {
            let xn = tape.input(x.clone());
            let kn = tape.param(s, k);
            let bn = tape.param(s, b);
            let y = tape.conv1d(xn, kn, bn).unwrap();
            let t = tape.input(target.clone());
            tape.sq_diff_sum(y, t).unwrap()
        });
        assert!(err < TOL, "conv1d case: max rel err {err}");
    }
}

#[test]
fn activation_gradients_three_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for kind in [Activation::Relu, Activation::Sigmoid] {
        for shape in [&[2usize, 3][..], &[1, 6], &[4, 2]] {
            let mut store = ParamStore::new();
            // Keep relu inputs away from the kink at 0.
            let mut init = random_tensor(&mut rng, shape, 0.2, 1.2);
            for (i, v) in init.data_mut().iter_mut().enumerate() {
                if i % 2 == 0 {
                    *v = -*v;
                }
            }
            let p = store.register("x", init).unwrap();
            let target = random_tensor(&mut rng, shape, 0.0, 1.0);
            let err = check(&mut store, &[p], &mut |s, tape| {
                let xn = tape.param(s, p);
                let y = tape.activation(xn, kind);
                let t = tape.input(target.clone());
                tape.sq_diff_sum(y, t).unwrap()
            });
            assert!(err < TOL, "{kind:?} {shape:?}: max rel err {err}");
        }
    }
}

#[test]
fn concat_and_slice_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    for (n, d1, d2) in [(2, 1, 3), (3, 2, 2), (1, 4, 1)] {
        let mut store = ParamStore::new();
        let a = store.register("a", random_tensor(&mut rng, &[n, d1], -1.0, 1.0)).unwrap();
        let b = store.register("b", random_tensor(&mut rng, &[n, d2], -1.0, 1.0)).unwrap();
        let target = random_tensor(&mut rng, &[n, 1], -0.5, 0.5);
        let err = check(&mut store, &[a, b], &mut |s, tape| {
            let an = tape.param(s, a);
            let bn = tape.param(s, b);
            let y = tape.concat(&[an, bn]).unwrap();
            let col = tape.slice_cols(y, d1 - 1, d1).unwrap();
            let sq1 = {
                let t = tape.input(target.clone());
                tape.sq_diff_sum(col, t).unwrap()
            };
            // also flow through the full concat so both parts get gradients
            let zeros = tape.input(Tensor::zeros(&[n, d1 + d2]));
            let sq2 = tape.sq_diff_sum(y, zeros).unwrap();
            let sum = tape.add(sq1, sq2).unwrap();
            tape.scale(sum, 0.5)
        });
        assert!(err < TOL, "concat/slice {n}/{d1}/{d2}: max rel err {err}");
    }
}

#[test]
fn cross_stitch_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    for (m, n, d) in [(2, 2, 3), (3, 1, 4), (2, 4, 2)] {
        let mut store = ParamStore::new();
        let feats: Vec<ParamId> = (0..m)
            .map(|i| {
                store
                    .register(&format!("f{i}"), random_tensor(&mut rng, &[n, d], -1.0, 1.0))
                    .unwrap()
            })
            .collect();
        let mixing = store
            .register("mix", random_tensor(&mut rng, &[m, m], -0.7, 0.7))
            .unwrap();
        let target = random_tensor(&mut rng, &[n, d], -0.5, 0.5);
        let mut params = feats.clone();
        params.push(mixing);
        let err = check(&mut store, &params, &mut |s, tape| {
            let fnodes: Vec<_> = feats.iter().map(|&f| tape.param(s, f)).collect();
            let mn = tape.param(s, mixing);
            let mut total = None;
            for row in 0..m {
                let y = tape.cross_stitch_row(&fnodes, mn, row).unwrap();
                let t = tape.input(target.clone());
                let sq = tape.sq_diff_sum(y, t).unwrap();
                total = Some(match total {
                    Some(acc) => tape.add(acc, sq).unwrap(),
                    None => sq,
                });
            }
            total.unwrap()
        });
        assert!(err < TOL, "stitch m={m}: max rel err {err}");
    }
}

#[test]
fn objective_gradients_through_two_layer_net() {
    // The full training objective: data term + per-view weight norms.
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for seed in 0..3u64 {
        let _ = seed;
        let (n, d, h) = (3, 4, 3);
        let mut store = ParamStore::new();
        let w1 = store.register("v0/w1", random_tensor(&mut rng, &[d, h], -0.9, 0.9)).unwrap();
        let b1 = store.register("v0/b1", random_tensor(&mut rng, &[h], -0.2, 0.2)).unwrap();
        let w2 = store.register("v0/w2", random_tensor(&mut rng, &[h, 1], -0.9, 0.9)).unwrap();
        let b2 = store.register("v0/b2", random_tensor(&mut rng, &[1], -0.2, 0.2)).unwrap();
        let x = random_tensor(&mut rng, &[n, d], -1.0, 1.0);
        let y = {
            let mut t = Tensor::zeros(&[n, 1]);
            for (i, v) in t.data_mut().iter_mut().enumerate() {
                *v = (i % 2) as f64;
            }
            t
        };
        let params = [w1, b1, w2, b2];
        let err = check(&mut store, &params, &mut |s, tape| {
            let xn = tape.input(x.clone());
            let w1n = tape.param(s, w1);
            let b1n = tape.param(s, b1);
            let hpre = tape.dense(xn, w1n, b1n).unwrap();
            let hact = tape.activation(hpre, Activation::Sigmoid);
            let w2n = tape.param(s, w2);
            let b2n = tape.param(s, b2);
            let out = tape.dense(hact, w2n, b2n).unwrap();
            let pred = tape.activation(out, Activation::Sigmoid);
            let yn = tape.input(y.clone());
            objective(tape, &[pred], &[yn], &[vec![w1n, w2n]], &[0.3]).unwrap()
        });
        assert!(err < TOL, "two-layer objective: max rel err {err}");
    }
}
