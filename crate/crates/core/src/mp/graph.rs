//! Batched point clouds and cutoff graphs.

use crate::error::{Error, Result};

/// Directed `(src, dst)` pairs of distinct nodes in the same molecule with
/// `0 < ‖x_src − x_dst‖ ≤ cutoff`, sorted by `(dst, src)`.
pub fn radius_graph(positions: &[[f64; 3]], batch_ids: &[usize], cutoff: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for dst in 0..positions.len() {
        for src in 0..positions.len() {
            if src == dst || batch_ids[src] != batch_ids[dst] {
                continue;
            }
            let r = distance(&positions[src], &positions[dst]);
            if r > 0.0 && r <= cutoff {
                edges.push((src, dst));
            }
        }
    }
    edges
}

/// Every ordered pair of distinct nodes within each molecule, sorted by `(dst, src)`.
pub fn complete_graph(batch_ids: &[usize]) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for dst in 0..batch_ids.len() {
        for src in 0..batch_ids.len() {
            if src != dst && batch_ids[src] == batch_ids[dst] {
                edges.push((src, dst));
            }
        }
    }
    edges
}

pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = sub(a, b);
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

pub(crate) fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Positions, flat node features and edges of a batch of molecules.
#[derive(Debug, Clone)]
pub struct Graph {
    pub positions: Vec<[f64; 3]>,
    /// `num_nodes × feature_dim`, row-major.
    pub node_features: Vec<f64>,
    pub feature_dim: usize,
    pub edges: Vec<(usize, usize)>,
    pub batch_ids: Vec<usize>,
}

impl Graph {
    /// Builds the radius graph; `batch_ids` must be non-decreasing.
    pub fn new(
        positions: Vec<[f64; 3]>,
        node_features: Vec<f64>,
        feature_dim: usize,
        batch_ids: Vec<usize>,
        cutoff: f64,
    ) -> Result<Self> {
        let n = positions.len();
        if batch_ids.len() != n {
            return Err(Error::shape(format!("{n} batch ids"), batch_ids.len()));
        }
        if node_features.len() != n * feature_dim {
            return Err(Error::shape(format!("{n}x{feature_dim} features"), node_features.len()));
        }
        if batch_ids.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::config("batch_ids", "must be sorted"));
        }
        if !(cutoff > 0.0) {
            return Err(Error::config("cutoff", "must be positive"));
        }
        let edges = radius_graph(&positions, &batch_ids, cutoff);
        Ok(Self {
            positions,
            node_features,
            feature_dim,
            edges,
            batch_ids,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn num_graphs(&self) -> usize {
        self.batch_ids.last().map_or(0, |b| b + 1)
    }

    pub fn src(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.0).collect()
    }

    pub fn dst(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.1).collect()
    }
}
