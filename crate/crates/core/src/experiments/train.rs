//! Seeded training loop with cosine warmup, gradient clipping and optional
//! rotation augmentation.

use std::fmt::Write as _;
use std::path::Path;
use std::rc::Rc;

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::experiments::config::ExperimentConfig;
use crate::experiments::data::{make_batch, Molecule, ToyDataset};
use crate::frames::LocalFrames;
use crate::group::random_rotation;
use crate::mp::config::TargetKind;
use crate::mp::graph::Graph;
use crate::mp::model::{build_model, Model};
use crate::nn::params::{AdamW, ParamStore};
use crate::nn::tape::Tape;
use crate::nn::tensor::Tensor;
use crate::nn::SMOOTH_L1_BETA;

pub const METRICS_HEADER: &str = "epoch,split,target,metric,value";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub epoch: usize,
    pub split: &'static str,
    pub target: &'static str,
    pub metric: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub rows: Vec<MetricRow>,
    /// Mean training loss per epoch, on normalized targets.
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Training-set loss without dropout before the first and after the last
    /// epoch; `None` when no epochs ran.
    pub initial_train_loss: Option<f64>,
    pub final_train_loss: Option<f64>,
    pub test_rmse: f64,
    pub test_mae: f64,
    /// Targets are divided by this before the loss.
    pub target_scale: f64,
    pub model: Model,
}

impl MetricsReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(METRICS_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{}", r.epoch, r.split, r.target, r.metric, r.value);
        }
        s
    }

    /// Writes `metrics.csv` and `checkpoint.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("metrics.csv"), self.to_csv())?;
        self.model.params.save(&dir.join("checkpoint.json"))
    }
}

/// Linear warmup then cosine decay; `t` counts epochs fractionally.
pub fn learning_rate(base: f64, t: f64, warmup: usize, epochs: usize) -> f64 {
    let w = warmup.min(epochs) as f64;
    if t < w {
        return base * (t + 1e-3).min(w) / w;
    }
    let span = (epochs as f64 - w).max(1e-12);
    let p = ((t - w) / span).clamp(0.0, 1.0);
    base * 0.5 * (1.0 + (std::f64::consts::PI * p).cos())
}

/// Training indices after applying `train_fraction` (a prefix of the split).
pub fn train_subset(cfg: &ExperimentConfig, dataset: &ToyDataset) -> Vec<usize> {
    let n = dataset.split.train.len();
    let k = ((n as f64 * cfg.train_fraction).round() as usize).clamp(1, n.max(1));
    dataset.split.train[..k.min(n)].to_vec()
}

/// Root-mean-square target component over `indices`.
fn target_scale(dataset: &ToyDataset, indices: &[usize], kind: TargetKind) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for &i in indices {
        for v in dataset.molecules[i].targets.flat(kind) {
            sum += v * v;
            count += 1;
        }
    }
    let rms = (sum / count.max(1) as f64).sqrt();
    if rms > 0.0 {
        rms
    } else {
        1.0
    }
}

/// Molecule rotated about the origin, targets recomputed.
fn rotated(m: &Molecule, rng: &mut ChaCha8Rng) -> Molecule {
    let q = random_rotation(rng);
    let positions = m
        .positions
        .iter()
        .map(|p| (q.matrix() * Vector3::from(*p)).into())
        .collect();
    Molecule::new(positions, m.charges.clone())
}

/// One shared random rotation per molecule.
fn shared_random_frames(graph: &Graph, rng: &mut ChaCha8Rng) -> LocalFrames {
    let per_graph: Vec<_> = (0..graph.num_graphs()).map(|_| random_rotation(rng)).collect();
    LocalFrames::from_elements(graph.batch_ids.iter().map(|&b| per_graph[b].clone()).collect())
}

/// Frames used outside training: predicted, or the identity for augmented models.
pub fn eval_frames(model: &Model, params: &ParamStore, graph: &Graph, augmentation: bool) -> Result<LocalFrames> {
    if augmentation {
        Ok(LocalFrames::identity(graph.num_nodes()))
    } else {
        model.frames(params, graph)
    }
}

struct Eval {
    loss: f64,
    rmse: f64,
    mae: f64,
}

fn evaluate(
    model: &Model,
    params: &ParamStore,
    dataset: &ToyDataset,
    indices: &[usize],
    cfg: &ExperimentConfig,
    scale: f64,
) -> Result<Eval> {
    let kind = model.config.target;
    let (mut loss, mut se, mut ae, mut count, mut batches) = (0.0, 0.0, 0.0, 0usize, 0usize);
    for chunk in indices.chunks(cfg.batch_size) {
        let mols: Vec<&Molecule> = chunk.iter().map(|&i| &dataset.molecules[i]).collect();
        let (graph, targets) = make_batch(&mols, kind, model.config.cutoff)?;
        let frames = eval_frames(model, params, &graph, cfg.augmentation)?;
        let mut tape = Tape::new();
        let y = model.forward(&mut tape, params, &graph, &frames, None)?;
        let scaled = Tensor::from_vec(chunk.len(), kind.dim(), targets.iter().map(|t| t / scale).collect());
        let l = tape.smooth_l1(y, Rc::new(scaled), SMOOTH_L1_BETA)?;
        loss += tape.value(l).item();
        batches += 1;
        for (p, t) in tape.value(y).data().iter().zip(&targets) {
            let d = p * scale - t;
            se += d * d;
            ae += d.abs();
            count += 1;
        }
    }
    let c = count.max(1) as f64;
    Ok(Eval {
        loss: loss / batches.max(1) as f64,
        rmse: (se / c).sqrt(),
        mae: ae / c,
    })
}

/// Trains a fresh model built from `cfg.model` with `cfg.seed`.
pub fn train(cfg: &ExperimentConfig, dataset: &ToyDataset) -> Result<MetricsReport> {
    cfg.validate()?;
    let split = &dataset.split;
    if split.train.iter().any(|i| split.val.contains(i) || split.test.contains(i))
        || split.val.iter().any(|i| split.test.contains(i))
    {
        return Err(Error::config("split", "train, validation and test sets overlap"));
    }
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::config("split", "train and test sets must be non-empty"));
    }
    let model = build_model(&cfg.model, cfg.seed)?;
    let kind = cfg.model.target;
    let target = kind.name();
    let train_idx = train_subset(cfg, dataset);
    let scale = target_scale(dataset, &train_idx, kind);
    let mut params = model.params.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_7a1e);
    let mut opt = AdamW {
        lr: cfg.lr,
        weight_decay: cfg.weight_decay,
        ..AdamW::default()
    };
    let steps_per_epoch = train_idx.len().div_ceil(cfg.batch_size);
    let mut rows = Vec::new();
    let mut train_loss = Vec::new();
    let mut val_loss = Vec::new();
    let mut initial_train_loss = None;
    if cfg.epochs > 0 {
        let l = evaluate(&model, &params, dataset, &train_idx, cfg, scale)?.loss;
        initial_train_loss = Some(l);
        rows.push(MetricRow {
            epoch: 0,
            split: "train",
            target,
            metric: "loss",
            value: l,
        });
    }

    for epoch in 0..cfg.epochs {
        let mut order = train_idx.clone();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let mols: Vec<Molecule>;
            let refs: Vec<&Molecule> = if cfg.augmentation {
                mols = chunk.iter().map(|&i| rotated(&dataset.molecules[i], &mut rng)).collect();
                mols.iter().collect()
            } else {
                chunk.iter().map(|&i| &dataset.molecules[i]).collect()
            };
            let (graph, targets) = make_batch(&refs, kind, cfg.model.cutoff)?;
            let frames = if cfg.augmentation {
                shared_random_frames(&graph, &mut rng)
            } else {
                model.frames(&params, &graph)?
            };
            let mut tape = Tape::new();
            let y = model.forward(&mut tape, &params, &graph, &frames, Some(&mut rng))?;
            let scaled = Tensor::from_vec(chunk.len(), kind.dim(), targets.iter().map(|t| t / scale).collect());
            let loss = tape.smooth_l1(y, Rc::new(scaled), SMOOTH_L1_BETA)?;
            let l = tape.value(loss).item();
            let grads = tape.backward(loss)?;
            params.zero_grads();
            grads.accumulate_into(&mut params);
            let grad_norm = params.clip_grad_norm(cfg.grad_clip);
            if !l.is_finite() || !grad_norm.is_finite() {
                return Err(Error::NanLoss {
                    epoch,
                    batch: b,
                    grad_norm,
                });
            }
            let t = epoch as f64 + b as f64 / steps_per_epoch as f64;
            opt.lr = learning_rate(cfg.lr, t, cfg.warmup_epochs, cfg.epochs);
            params.adamw_step(&opt);
            total += l;
        }
        let tl = total / steps_per_epoch as f64;
        train_loss.push(tl);
        rows.push(MetricRow {
            epoch: epoch + 1,
            split: "train",
            target,
            metric: "loss",
            value: tl,
        });
        if !split.val.is_empty() {
            let v = evaluate(&model, &params, dataset, &split.val, cfg, scale)?;
            val_loss.push(v.loss);
            rows.push(MetricRow {
                epoch: epoch + 1,
                split: "val",
                target,
                metric: "loss",
                value: v.loss,
            });
        }
        log::info!("epoch {} train loss {tl:.5}", epoch + 1);
    }

    let final_train_loss = if cfg.epochs > 0 {
        let l = evaluate(&model, &params, dataset, &train_idx, cfg, scale)?.loss;
        rows.push(MetricRow {
            epoch: cfg.epochs,
            split: "train",
            target,
            metric: "eval_loss",
            value: l,
        });
        Some(l)
    } else {
        None
    };
    let test = evaluate(&model, &params, dataset, &split.test, cfg, scale)?;
    for (metric, value) in [("rmse", test.rmse), ("mae", test.mae)] {
        rows.push(MetricRow {
            epoch: cfg.epochs,
            split: "test",
            target,
            metric,
            value,
        });
    }
    Ok(MetricsReport {
        rows,
        train_loss,
        val_loss,
        initial_train_loss,
        final_train_loss,
        test_rmse: test.rmse,
        test_mae: test.mae,
        target_scale: scale,
        model: Model { params, ..model },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::data::DatasetConfig;
    use crate::mp::config::ModeKind;

    fn quick(epochs: usize, target: TargetKind) -> (ExperimentConfig, ToyDataset) {
        let mut cfg = ExperimentConfig {
            epochs,
            batch_size: 16,
            warmup_epochs: 1,
            lr: 2e-3,
            ..ExperimentConfig::default()
        };
        cfg.model.num_layers = 1;
        cfg.model.target = target;
        cfg.model.hidden_rep = "4x0n+2x1n+1x2n".into();
        let ds = ToyDataset::generate(&DatasetConfig {
            n_molecules: 64,
            nodes_min: 4,
            nodes_max: 6,
            ..DatasetConfig::default()
        })
        .unwrap();
        (cfg, ds)
    }

    #[test]
    fn schedule_shape() {
        assert!(learning_rate(1.0, 0.0, 5, 20) < 0.01);
        assert!((learning_rate(1.0, 5.0, 5, 20) - 1.0).abs() < 1e-12);
        assert!(learning_rate(1.0, 20.0, 5, 20).abs() < 1e-12);
        assert!(learning_rate(1.0, 10.0, 5, 20) > learning_rate(1.0, 15.0, 5, 20));
    }

    #[test]
    fn zero_epochs_reports_only_test_metrics() {
        let (cfg, ds) = quick(0, TargetKind::Vector);
        let r = train(&cfg, &ds).unwrap();
        assert!(r.train_loss.is_empty());
        assert_eq!(r.rows.len(), 2);
        assert!(r.rows.iter().all(|row| row.split == "test" && row.epoch == 0));
        let csv = r.to_csv();
        assert!(csv.starts_with("epoch,split,target,metric,value\n0,test,vector,rmse,"));
    }

    #[test]
    fn smoke_training_reduces_loss() {
        let (cfg, ds) = quick(5, TargetKind::Scalar);
        let r = train(&cfg, &ds).unwrap();
        assert_eq!(r.train_loss.len(), 5);
        let (a, b) = (r.initial_train_loss.unwrap(), r.final_train_loss.unwrap());
        assert!(b < a, "{a} -> {b}");
        let again = train(&cfg, &ds).unwrap();
        assert_eq!(again.to_csv(), r.to_csv());
    }

    #[test]
    fn augmentation_runs_and_breaks_invariance() {
        let (mut cfg, ds) = quick(1, TargetKind::Scalar);
        cfg.augmentation = true;
        cfg.model.mode = ModeKind::Scalar;
        let r = train(&cfg, &ds).unwrap();
        let m = &ds.molecules[0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m2 = rotated(m, &mut rng);
        let out = |mol: &Molecule| {
            let (g, _) = make_batch(&[mol], TargetKind::Scalar, cfg.model.cutoff).unwrap();
            let frames = eval_frames(&r.model, &r.model.params, &g, true).unwrap();
            let mut tape = Tape::new();
            let y = r.model.forward(&mut tape, &r.model.params, &g, &frames, None).unwrap();
            tape.value(y).item()
        };
        assert!((out(m) - out(&m2)).abs() > 1e-8);
    }

    #[test]
    fn checkpoint_and_csv_written() {
        let (cfg, ds) = quick(1, TargetKind::Tensor);
        let r = train(&cfg, &ds).unwrap();
        let dir = tempfile::tempdir().unwrap();
        r.write(dir.path()).unwrap();
        let back = ParamStore::load(&dir.path().join("checkpoint.json")).unwrap();
        assert_eq!(back.names(), r.model.params.names());
        let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert!(csv.contains("1,train,tensor,loss,"));
        assert!(csv.contains("1,test,tensor,mae,"));
    }
}
