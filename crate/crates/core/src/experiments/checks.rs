//! Equivariance reports for predicted frames and whole models under random
//! rotations plus translations.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use crate::error::Result;
use crate::experiments::data::{make_batch, Molecule};
use crate::frames::compute_frames;
use crate::group::{random_rotation, GroupElement};
use crate::mp::config::TargetKind;
use crate::mp::graph::complete_graph;
use crate::mp::model::Model;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameCheck {
    pub molecules: usize,
    pub transforms: usize,
    /// `max ‖F(QX+t) − F(X)Qᵀ‖∞` over non-degenerate nodes.
    pub max_error: f64,
    pub degenerate_nodes: usize,
    pub nodes: usize,
}

fn transformed(positions: &[[f64; 3]], q: &GroupElement, t: &Vector3<f64>) -> Vec<[f64; 3]> {
    positions
        .iter()
        .map(|p| (q.matrix() * Vector3::from(*p) + t).into())
        .collect()
}

fn random_shift(rng: &mut impl Rng) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.gen_range(-5.0..5.0))
}

/// Frames from whole-molecule neighborhoods, `transforms` random proper
/// rotations with translations per molecule.
pub fn frame_equivariance(molecules: &[Molecule], transforms: usize, rng: &mut impl Rng) -> Result<FrameCheck> {
    let mut max_error = 0.0f64;
    let mut degenerate_nodes = 0;
    let mut nodes = 0;
    for m in molecules {
        let edges = complete_graph(&vec![0; m.len()]);
        let base = compute_frames(&m.positions, &edges, None)?;
        degenerate_nodes += base.num_degenerate();
        nodes += m.len();
        for _ in 0..transforms {
            let q = random_rotation(rng);
            let t = random_shift(rng);
            let moved = compute_frames(&transformed(&m.positions, &q, &t), &edges, None)?;
            for i in 0..m.len() {
                if base.is_degenerate(i) || moved.is_degenerate(i) {
                    continue;
                }
                let want = base.matrix(i) * q.matrix().transpose();
                max_error = max_error.max((moved.matrix(i) - want).amax());
            }
        }
    }
    Ok(FrameCheck {
        molecules: molecules.len(),
        transforms,
        max_error,
        degenerate_nodes,
        nodes,
    })
}

/// Applies the target's transformation law to one prediction row.
fn act(kind: TargetKind, q: &Matrix3<f64>, y: &[f64]) -> Vec<f64> {
    match kind {
        TargetKind::Scalar => y.to_vec(),
        TargetKind::Vector => (q * Vector3::from_column_slice(y)).as_slice().to_vec(),
        TargetKind::Tensor => {
            let a = Matrix3::from_row_slice(y);
            let r = q * a * q.transpose();
            (0..9).map(|k| r[(k / 3, k % 3)]).collect()
        }
    }
}

/// `max ‖f(QX+t) − ρ(Q)f(X)‖∞` for the model's predictions with predicted
/// frames, relative to `max(1, ‖f(X)‖∞)`.
pub fn model_equivariance(model: &Model, molecules: &[Molecule], transforms: usize, rng: &mut impl Rng) -> Result<f64> {
    let kind = model.config.target;
    let mut max_error = 0.0f64;
    for m in molecules {
        let (g, _) = make_batch(&[m], kind, model.config.cutoff)?;
        let base = model.predict(&g)?;
        let scale = base.max_abs().max(1.0);
        for _ in 0..transforms {
            let q = random_rotation(rng);
            let t = random_shift(rng);
            let moved = Molecule::new(transformed(&m.positions, &q, &t), m.charges.clone());
            let (g2, _) = make_batch(&[&moved], kind, model.config.cutoff)?;
            let out = model.predict(&g2)?;
            let want = act(kind, q.matrix(), base.data());
            let err = out.data().iter().zip(&want).fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
            max_error = max_error.max(err / scale);
        }
    }
    Ok(max_error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::data::{DatasetConfig, ToyDataset};
    use crate::mp::config::{ModeKind, ModelConfig};
    use crate::mp::model::build_model;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn frames_and_models_pass() {
        let ds = ToyDataset::generate(&DatasetConfig {
            n_molecules: 4,
            ..DatasetConfig::default()
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = frame_equivariance(&ds.molecules, 3, &mut rng).unwrap();
        assert!(f.max_error < 1e-10, "{f:?}");
        let mut cfg = ModelConfig::toy();
        cfg.num_layers = 1;
        cfg.mode = ModeKind::Irrep;
        cfg.target = TargetKind::Tensor;
        let model = build_model(&cfg, 0).unwrap();
        assert!(model_equivariance(&model, &ds.molecules, 2, &mut rng).unwrap() < 1e-10);
    }
}
