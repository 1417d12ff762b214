//! Named trainable parameters with gradient buffers.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Handle into a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone)]
struct Slot {
    name: String,
    value: Tensor,
    grad: Tensor,
}

/// Owns every trainable tensor of a model together with its gradient.
///
/// Parameter order is registration order, which makes iteration (and hence
/// serialization and SGD updates) deterministic.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    slots: Vec<Slot>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore { slots: Vec::new() }
    }

    /// Registers a parameter under a unique name; the gradient starts at zero.
    pub fn register(&mut self, name: &str, value: Tensor) -> Result<ParamId> {
        if self.slots.iter().any(|s| s.name == name) {
            return Err(Error::Validation(format!("duplicate parameter name `{name}`")));
        }
        let grad = Tensor::zeros(value.shape());
        self.slots.push(Slot { name: String::from(name), value, grad });
        Ok(ParamId(self.slots.len() - 1))
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.slots[id.0].name
    }

    /// Looks a parameter up by its registered name.
    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.slots.iter().position(|s| s.name == name).map(ParamId)
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.slots[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.slots[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.slots[id.0].grad
    }

    /// Adds `delta` into the gradient buffer of `id`.
    pub fn accumulate_grad(&mut self, id: ParamId, delta: &Tensor) -> Result<()> {
        let slot = &mut self.slots[id.0];
        if slot.grad.shape() != delta.shape() {
            return Err(Error::Dimension(format!(
                "gradient shape {:?} does not match parameter `{}` of shape {:?}",
                delta.shape(),
                slot.name,
                slot.value.shape()
            )));
        }
        for (g, d) in slot.grad.data_mut().iter_mut().zip(delta.data()) {
            *g += d;
        }
        Ok(())
    }

    /// Zeroes every gradient buffer; call at the start of an accumulation cycle.
    pub fn zero_grads(&mut self) {
        for slot in &mut self.slots {
            for g in slot.grad.data_mut() {
                *g = 0.0;
            }
        }
    }

    /// Plain SGD: `value -= lr * grad`, then gradients are zeroed.
    pub fn sgd_step(&mut self, lr: f64) -> Result<()> {
        if !(lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
        }
        for slot in &mut self.slots {
            let grads = slot.grad.data_mut();
            for (v, g) in slot.value.data_mut().iter_mut().zip(grads.iter_mut()) {
                *v -= lr * *g;
                *g = 0.0;
            }
        }
        Ok(())
    }

    /// Iterates `(id, name, value)` in registration order.
    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor)> {
        self.slots.iter().enumerate().map(|(i, s)| (ParamId(i), s.name.as_str(), &s.value))
    }
}

/// Uniform init in `[-s, s]` with `s = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng>(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut R) -> Tensor {
    let bound = crate::fmath::sqrt(6.0 / (fan_in + fan_out) as f64);
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = rng.gen_range(-bound..=bound);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sgd_arithmetic() {
        let mut store = ParamStore::new();
        let id = store.register("w", Tensor::scalar(1.0)).unwrap();
        store.accumulate_grad(id, &Tensor::scalar(2.0)).unwrap();
        store.sgd_step(0.1).unwrap();
        assert_eq!(store.value(id).data()[0], 0.8);
        assert_eq!(store.grad(id).data()[0], 0.0);
    }

    #[test]
    fn sgd_rejects_nonpositive_lr() {
        let mut store = ParamStore::new();
        store.register("w", Tensor::scalar(1.0)).unwrap();
        assert!(matches!(store.sgd_step(0.0), Err(Error::Config(_))));
        assert!(matches!(store.sgd_step(-1.0), Err(Error::Config(_))));
    }

    #[test]
    fn tiny_lr_moves_at_most_lr_times_grad() {
        let mut store = ParamStore::new();
        let id = store.register("w", Tensor::scalar(1.0)).unwrap();
        store.accumulate_grad(id, &Tensor::scalar(1.0)).unwrap();
        store.sgd_step(1e-12).unwrap();
        assert!((store.value(id).data()[0] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut store = ParamStore::new();
        store.register("w", Tensor::scalar(0.0)).unwrap();
        assert!(store.register("w", Tensor::scalar(0.0)).is_err());
    }

    #[test]
    fn glorot_bound_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = glorot_uniform(&[4, 4], 4, 4, &mut rng);
        let bound = (6.0f64 / 8.0).sqrt();
        assert!(t.data().iter().all(|v| v.abs() <= bound));
        let mut rng2 = ChaCha8Rng::seed_from_u64(7);
        let t2 = glorot_uniform(&[4, 4], 4, 4, &mut rng2);
        assert_eq!(t, t2);
        let _ = vec![0];
    }
}
