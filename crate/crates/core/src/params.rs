//! Named trainable tensors, their gradient accumulators, and Adam state.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Index of an entry in a [`ParameterSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    name: String,
    value: Tensor,
    trainable: bool,
    grad: Vec<f64>,
    adam_m: Vec<f64>,
    adam_v: Vec<f64>,
}

/// Ordered collection of named tensors.
///
/// Non-trainable entries (frozen embeddings, batch-norm running statistics)
/// live here too so that a model is fully described by one set; the
/// optimizer skips them and graphs treat them as constants.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterSet {
    entries: Vec<Entry>,
    index: HashMap<String, usize>,
    step_count: u64,
}

/// Adam hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Gradients harvested from a graph, keyed by parameter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamGrads(pub(crate) Vec<(ParamId, Vec<f64>)>);

impl ParamGrads {
    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &[f64])> {
        self.0.iter().map(|(id, g)| (*id, g.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl ParameterSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor, trainable: bool) -> Result<ParamId> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::invalid(format!("duplicate parameter `{name}`")));
        }
        let n = value.numel();
        let id = self.entries.len();
        self.index.insert(name.clone(), id);
        self.entries.push(Entry {
            name,
            value,
            trainable,
            grad: vec![0.0; n],
            adam_m: vec![0.0; n],
            adam_v: vec![0.0; n],
        });
        Ok(ParamId(id))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id(&self, name: &str) -> Result<ParamId> {
        self.index
            .get(name)
            .map(|&i| ParamId(i))
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].value
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        Ok(self.value(self.id(name)?))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        let id = self.id(name)?;
        Ok(self.value_mut(id))
    }

    pub fn is_trainable(&self, id: ParamId) -> bool {
        self.entries[id.0].trainable
    }

    pub fn set_trainable(&mut self, id: ParamId, trainable: bool) {
        self.entries[id.0].trainable = trainable;
    }

    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.entries[id.0].grad
    }

    pub fn adam_moments(&self, id: ParamId) -> (&[f64], &[f64]) {
        let e = &self.entries[id.0];
        (&e.adam_m, &e.adam_v)
    }

    pub(crate) fn set_adam_moments(&mut self, id: ParamId, m: Vec<f64>, v: Vec<f64>) {
        let e = &mut self.entries[id.0];
        debug_assert_eq!(m.len(), e.value.numel());
        debug_assert_eq!(v.len(), e.value.numel());
        e.adam_m = m;
        e.adam_v = v;
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub(crate) fn set_step_count(&mut self, t: u64) {
        self.step_count = t;
    }

    /// Total number of trainable scalars.
    pub fn trainable_len(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.trainable)
            .map(|e| e.value.numel())
            .sum()
    }

    pub fn zero_grad(&mut self) {
        for e in &mut self.entries {
            e.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Adds harvested gradients into the accumulators.
    pub fn accumulate(&mut self, grads: &ParamGrads) {
        for (id, g) in grads.iter() {
            let acc = &mut self.entries[id.0].grad;
            for (a, b) in acc.iter_mut().zip(g) {
                *a += b;
            }
        }
    }

    /// Global L2 norm of the trainable gradients.
    pub fn grad_norm(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.trainable)
            .flat_map(|e| e.grad.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales gradients so their global norm is at most `max_norm`.
    pub fn clip_grad_norm(&mut self, max_norm: f64) {
        let norm = self.grad_norm();
        if norm > max_norm && norm > 0.0 {
            let scale = max_norm / norm;
            for e in self.entries.iter_mut().filter(|e| e.trainable) {
                e.grad.iter_mut().for_each(|g| *g *= scale);
            }
        }
    }

    /// One bias-corrected Adam update of every trainable entry, then zeroes
    /// all gradients. The step counter is incremented first, so the first
    /// call uses `t = 1`.
    pub fn adam_step(&mut self, cfg: &AdamConfig) {
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for e in self.entries.iter_mut().filter(|e| e.trainable) {
            let values = e.value.data_mut();
            for i in 0..values.len() {
                let g = e.grad[i];
                e.adam_m[i] = cfg.beta1 * e.adam_m[i] + (1.0 - cfg.beta1) * g;
                e.adam_v[i] = cfg.beta2 * e.adam_v[i] + (1.0 - cfg.beta2) * g * g;
                let m_hat = e.adam_m[i] / bc1;
                let v_hat = e.adam_v[i] / bc2;
                values[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
        }
        self.zero_grad();
    }
}
