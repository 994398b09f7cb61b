use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone)]
struct Entry {
    value: Tensor,
    grad: Tensor,
    learnable: bool,
    // AdamW moments.
    m: Tensor,
    v: Tensor,
}

/// Named parameters with gradients and optimizer side-slots. Iteration is in
/// name order.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    entries: BTreeMap<String, Entry>,
    step: u64,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor, learnable: bool) {
        let (r, c) = value.shape();
        self.entries.insert(
            name.into(),
            Entry {
                grad: Tensor::zeros(r, c),
                m: Tensor::zeros(r, c),
                v: Tensor::zeros(r, c),
                value,
                learnable,
            },
        );
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.entries.values().map(|e| e.value.len()).sum()
    }

    pub fn value(&self, name: &str) -> Option<&Tensor> {
        self.entries.get(name).map(|e| &e.value)
    }

    pub fn value_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries.get_mut(name).map(|e| &mut e.value)
    }

    pub fn grad(&self, name: &str) -> Option<&Tensor> {
        self.entries.get(name).map(|e| &e.grad)
    }

    pub fn is_learnable(&self, name: &str) -> bool {
        self.entries.get(name).is_some_and(|e| e.learnable)
    }

    pub fn set_learnable(&mut self, name: &str, learnable: bool) -> Result<()> {
        self.entries
            .get_mut(name)
            .map(|e| e.learnable = learnable)
            .ok_or_else(|| Error::UnknownParam(name.to_string()))
    }

    pub(crate) fn add_grad(&mut self, name: &str, g: &Tensor) {
        if let Some(e) = self.entries.get_mut(name) {
            e.grad.add_assign(g);
        }
    }

    pub fn zero_grads(&mut self) {
        for e in self.entries.values_mut() {
            e.grad.fill(0.0);
        }
    }

    /// `√Σ‖grad‖²` over learnable parameters.
    pub fn grad_norm(&self) -> f64 {
        self.entries
            .values()
            .filter(|e| e.learnable)
            .map(|e| e.grad.norm_sq())
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales gradients so their global norm is at most `max_norm`.
    /// Returns the norm before clipping.
    pub fn clip_grad_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.grad_norm();
        if norm > max_norm && norm > 0.0 {
            let s = max_norm / norm;
            for e in self.entries.values_mut().filter(|e| e.learnable) {
                e.grad.data_mut().iter_mut().for_each(|g| *g *= s);
            }
        }
        norm
    }

    /// Weight `[out, in]` uniform in `±1/√in`, bias `[1, out]` zero.
    pub fn init_linear(&mut self, name: &str, input: usize, output: usize, rng: &mut impl Rng) {
        let bound = 1.0 / (input.max(1) as f64).sqrt();
        let w = (0..input * output).map(|_| rng.gen_range(-bound..bound)).collect();
        self.insert(format!("{name}.weight"), Tensor::from_vec(output, input, w), true);
        self.insert(format!("{name}.bias"), Tensor::zeros(1, output), true);
    }

    /// Layers `{name}.0 … {name}.k` for widths `input → hidden… → output`.
    pub fn init_mlp(
        &mut self,
        name: &str,
        input: usize,
        hidden: &[usize],
        output: usize,
        rng: &mut impl Rng,
    ) {
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(output);
        for (i, w) in widths.windows(2).enumerate() {
            self.init_linear(&format!("{name}.{i}"), w[0], w[1], rng);
        }
    }

    pub fn init_layernorm(&mut self, name: &str, dim: usize) {
        self.insert(format!("{name}.gamma"), Tensor::filled(1, dim, 1.0), true);
        self.insert(format!("{name}.beta"), Tensor::zeros(1, dim), true);
    }

    /// One decoupled-weight-decay Adam update of every learnable parameter.
    pub fn adamw_step(&mut self, cfg: &AdamW) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for e in self.entries.values_mut().filter(|e| e.learnable) {
            let n = e.value.len();
            let (w, g) = (e.value.data_mut(), e.grad.data());
            let (m, v) = (e.m.data_mut(), e.v.data_mut());
            for i in 0..n {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                w[i] -= cfg.lr * cfg.weight_decay * w[i];
                w[i] -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
            }
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            params: self
                .entries
                .iter()
                .map(|(k, e)| {
                    (
                        k.clone(),
                        CheckpointEntry {
                            shape: [e.value.rows(), e.value.cols()],
                            learnable: e.learnable,
                            values: e.value.data().to_vec(),
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::config(
                "format",
                format!("unsupported checkpoint {} v{}", ck.format, ck.version),
            ));
        }
        let mut store = ParamStore::new();
        for (name, e) in &ck.params {
            if e.values.len() != e.shape[0] * e.shape[1] {
                return Err(Error::config(
                    format!("params.{name}"),
                    "values do not match shape",
                ));
            }
            store.insert(
                name.clone(),
                Tensor::from_vec(e.shape[0], e.shape[1], e.values.clone()),
                e.learnable,
            );
        }
        Ok(store)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_string(&self.to_checkpoint())?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_checkpoint(&ck)
    }
}

/// AdamW hyperparameters. Defaults: lr 5e-4, weight decay 5e-3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamW {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamW {
    fn default() -> Self {
        Self {
            lr: 5e-4,
            weight_decay: 5e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

pub const CHECKPOINT_FORMAT: &str = "locanon-params";
pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON checkpoint: `name → {shape, learnable, values}` with row-major values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub params: BTreeMap<String, CheckpointEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub shape: [usize; 2],
    pub learnable: bool,
    pub values: Vec<f64>,
}
