//! Per-node equivariant local frames from neighbor geometry, frame
//! transitions, and moving features between global and local frames.
//!
//! Node `i` sums `w₁(r)·(xⱼ−xᵢ)` and `w₂(r)·(xⱼ−xᵢ)` over its incoming edges
//! and Gram-Schmidt orthonormalizes the two vectors. The frame matrix holds
//! the resulting basis as rows, so `F·v` gives local coordinates of a global
//! vector `v`, and a rotated input `Q·x + t` yields `F·Qᵀ`.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use crate::embeddings::{radial_embed_with, BesselConfig};
use crate::error::{Error, Result};
use crate::group::{random_rotation, GroupElement};
use crate::mp::graph::{distance, sub};
use crate::nn::layers::mlp;
use crate::nn::params::ParamStore;
use crate::nn::tape::Tape;
use crate::nn::tensor::Tensor;
use crate::reps::action::RepAction;
use crate::reps::spec::RepSpec;

/// Relative threshold for both degeneracy tests.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalFrames {
    frames: Vec<GroupElement>,
    degenerate: Vec<bool>,
}

impl LocalFrames {
    pub fn identity(n: usize) -> Self {
        Self {
            frames: vec![GroupElement::identity(); n],
            degenerate: vec![false; n],
        }
    }

    /// Frames supplied directly, none flagged.
    pub fn from_elements(frames: Vec<GroupElement>) -> Self {
        let degenerate = vec![false; frames.len()];
        Self { frames, degenerate }
    }

    /// Independent Haar-random rotations.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        Self::from_elements((0..n).map(|_| random_rotation(rng)).collect())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, i: usize) -> &GroupElement {
        &self.frames[i]
    }

    pub fn frames(&self) -> &[GroupElement] {
        &self.frames
    }

    pub fn matrix(&self, i: usize) -> &Matrix3<f64> {
        self.frames[i].matrix()
    }

    pub fn is_degenerate(&self, i: usize) -> bool {
        self.degenerate[i]
    }

    pub fn degenerate_mask(&self) -> &[bool] {
        &self.degenerate
    }

    pub fn num_degenerate(&self) -> usize {
        self.degenerate.iter().filter(|&&d| d).count()
    }
}

/// Learned distance weights: two MLPs on the radial embedding, `{name}.w1`
/// and `{name}.w2`, each mapping `num_radial → hidden… → 1`.
#[derive(Debug, Clone)]
pub struct FrameWeights<'a> {
    pub params: &'a ParamStore,
    pub name: &'a str,
    pub bessel: &'a BesselConfig,
}

impl FrameWeights<'_> {
    pub fn init(params: &mut ParamStore, name: &str, bessel: &BesselConfig, hidden: &[usize], rng: &mut impl Rng) {
        params.init_mlp(&format!("{name}.w1"), bessel.num_radial, hidden, 1, rng);
        params.init_mlp(&format!("{name}.w2"), bessel.num_radial, hidden, 1, rng);
    }

    fn eval(&self, distances: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let freqs = self.bessel.radial_freqs();
        let mut rows = Vec::with_capacity(distances.len() * freqs.len());
        for &r in distances {
            rows.extend(radial_embed_with(self.bessel, &freqs, r)?);
        }
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::from_vec(distances.len(), freqs.len(), rows));
        let w1 = mlp(&mut tape, self.params, &format!("{}.w1", self.name), x)?;
        let w2 = mlp(&mut tape, self.params, &format!("{}.w2", self.name), x)?;
        Ok((tape.value(w1).data().to_vec(), tape.value(w2).data().to_vec()))
    }
}

/// Frames for every node from its incoming `(src, dst)` edges. Nodes whose two
/// summed vectors are (near) parallel or vanish get the identity frame and a
/// set mask bit.
pub fn compute_frames(
    positions: &[[f64; 3]],
    edges: &[(usize, usize)],
    weights: Option<&FrameWeights>,
) -> Result<LocalFrames> {
    let n = positions.len();
    let dists: Vec<f64> = edges.iter().map(|&(s, d)| distance(&positions[s], &positions[d])).collect();
    let (w1, w2) = match weights {
        Some(w) => w.eval(&dists)?,
        None => (
            dists.iter().map(|r| 1.0 / (r * r)).collect(),
            dists.iter().map(|r| 1.0 / r).collect(),
        ),
    };
    let mut v1 = vec![Vector3::zeros(); n];
    let mut v2 = vec![Vector3::zeros(); n];
    let mut length_sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for (e, &(s, d)) in edges.iter().enumerate() {
        if dists[e] == 0.0 {
            continue;
        }
        let rel = Vector3::from(sub(&positions[s], &positions[d]));
        v1[d] += rel * w1[e];
        v2[d] += rel * w2[e];
        length_sum[d] += dists[e];
        count[d] += 1;
    }

    let mut frames = Vec::with_capacity(n);
    let mut degenerate = Vec::with_capacity(n);
    for i in 0..n {
        match orthonormal_frame(&v1[i], &v2[i], length_sum[i] / count[i].max(1) as f64) {
            Some(f) => {
                frames.push(GroupElement::from_matrix_unchecked(f));
                degenerate.push(false);
            }
            None => {
                frames.push(GroupElement::identity());
                degenerate.push(true);
            }
        }
    }
    Ok(LocalFrames { frames, degenerate })
}

fn orthonormal_frame(v1: &Vector3<f64>, v2: &Vector3<f64>, mean_length: f64) -> Option<Matrix3<f64>> {
    let n1 = v1.norm();
    if !(n1 >= DEGENERACY_TOL * mean_length) || n1 == 0.0 {
        return None;
    }
    let e1 = v1 / n1;
    let resid = v2 - e1 * e1.dot(v2);
    let nr = resid.norm();
    if !(nr >= DEGENERACY_TOL * v2.norm()) || nr == 0.0 {
        return None;
    }
    let e2 = resid / nr;
    let e3 = e1.cross(&e2);
    Some(Matrix3::from_rows(&[e1.transpose(), e2.transpose(), e3.transpose()]))
}

/// `Fᵢ·Fⱼᵀ`, carrying features from node `j`'s frame into node `i`'s.
pub fn transition(frames: &LocalFrames, i: usize, j: usize) -> Result<GroupElement> {
    for node in [i, j] {
        if frames.is_degenerate(node) {
            return Err(Error::DegenerateFrame { node });
        }
    }
    Ok(transition_unchecked(frames, i, j))
}

/// [`transition`] without the degeneracy check; masked nodes use their fallback frame.
pub fn transition_unchecked(frames: &LocalFrames, i: usize, j: usize) -> GroupElement {
    GroupElement::from_matrix_unchecked(frames.matrix(i) * frames.matrix(j).transpose())
}

/// Expresses global per-node features (row-major `N × spec.total_dim()`) in
/// each node's local frame. Masked nodes use their identity fallback, which
/// leaves their features unchanged.
pub fn canonicalize(spec: &RepSpec, frames: &LocalFrames, features: &[f64]) -> Result<Vec<f64>> {
    map_nodes(spec, frames, features, false)
}

/// Inverse of [`canonicalize`].
pub fn decanonicalize(spec: &RepSpec, frames: &LocalFrames, features: &[f64]) -> Result<Vec<f64>> {
    map_nodes(spec, frames, features, true)
}

fn map_nodes(spec: &RepSpec, frames: &LocalFrames, features: &[f64], inverse: bool) -> Result<Vec<f64>> {
    let d = spec.total_dim();
    if features.len() != frames.len() * d {
        return Err(Error::shape(format!("{} x {d} features", frames.len()), features.len()));
    }
    if spec.is_trivial() || frames.is_empty() {
        return Ok(features.to_vec());
    }
    let mut out = vec![0.0; features.len()];
    let mut scratch = vec![0.0; RepAction::scratch_len(spec)];
    let mut action = RepAction::new(spec, frames.frame(0))?;
    for i in 0..frames.len() {
        action.update(frames.frame(i));
        let (x, y) = (&features[i * d..(i + 1) * d], &mut out[i * d..(i + 1) * d]);
        if inverse {
            action.apply_transpose_into(spec, x, y, &mut scratch);
        } else {
            action.apply_into(spec, x, y, &mut scratch);
        }
    }
    Ok(out)
}
