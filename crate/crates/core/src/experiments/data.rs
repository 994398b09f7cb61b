//! Synthetic molecules with charge-derived scalar, vector and tensor targets.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mp::config::TargetKind;
use crate::mp::graph::{distance, Graph};

/// Molecules are resampled while two nodes sit closer than this (after rescaling).
pub const MIN_SEPARATION: f64 = 0.5;
const MAX_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    pub scalar: f64,
    pub vector: [f64; 3],
    pub tensor: [[f64; 3]; 3],
}

impl Targets {
    /// `s = Σᵢ<ⱼ qᵢqⱼ/rᵢⱼ`, `p = Σ qᵢ(xᵢ−c)`, `α = Σ qᵢ(xᵢ−c)(xᵢ−c)ᵀ` with `c` the centroid.
    pub fn compute(positions: &[[f64; 3]], charges: &[f64]) -> Self {
        let n = positions.len();
        let mut c = [0.0; 3];
        for p in positions {
            for k in 0..3 {
                c[k] += p[k];
            }
        }
        for v in &mut c {
            *v /= n.max(1) as f64;
        }
        let mut scalar = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                scalar += charges[i] * charges[j] / distance(&positions[i], &positions[j]);
            }
        }
        let mut vector = [0.0; 3];
        let mut tensor = [[0.0; 3]; 3];
        for (p, &q) in positions.iter().zip(charges) {
            let r = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
            for a in 0..3 {
                vector[a] += q * r[a];
                for b in a..3 {
                    tensor[a][b] += q * (r[a] * r[b]);
                }
            }
        }
        for a in 0..3 {
            for b in 0..a {
                tensor[a][b] = tensor[b][a];
            }
        }
        Self { scalar, vector, tensor }
    }

    /// Row-major components for `kind`.
    pub fn flat(&self, kind: TargetKind) -> Vec<f64> {
        match kind {
            TargetKind::Scalar => vec![self.scalar],
            TargetKind::Vector => self.vector.to_vec(),
            TargetKind::Tensor => self.tensor.iter().flatten().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Molecule {
    pub positions: Vec<[f64; 3]>,
    pub charges: Vec<f64>,
    pub targets: Targets,
}

impl Molecule {
    pub fn new(positions: Vec<[f64; 3]>, charges: Vec<f64>) -> Self {
        let targets = Targets::compute(&positions, &charges);
        Self {
            positions,
            charges,
            targets,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Index sets into [`ToyDataset::molecules`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// First 80 % train, next 10 % validation, rest test.
    pub fn standard(n: usize) -> Self {
        let n_train = n * 8 / 10;
        let n_val = n / 10;
        Self {
            train: (0..n_train).collect(),
            val: (n_train..n_train + n_val).collect(),
            test: (n_train + n_val..n).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyDataset {
    pub molecules: Vec<Molecule>,
    pub split: Split,
}

/// Generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub n_molecules: usize,
    pub nodes_min: usize,
    pub nodes_max: usize,
    pub box_scale: f64,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_molecules: 400,
            nodes_min: 5,
            nodes_max: 9,
            box_scale: 3.0,
            seed: 0,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(3 <= self.nodes_min && self.nodes_min <= self.nodes_max && self.nodes_max <= 64) {
            return Err(Error::config("dataset.nodes_min", "node range must lie within [3, 64]"));
        }
        if self.n_molecules == 0 {
            return Err(Error::config("dataset.n_molecules", "must be positive"));
        }
        if !(self.box_scale > 0.0) {
            return Err(Error::config("dataset.box_scale", "must be positive"));
        }
        Ok(())
    }
}

/// Node counts uniform in `nodes_range`, positions uniform in a cube of side
/// `box_scale` rescaled to unit mean nearest-neighbor distance, charges
/// uniform in `[−1, 1]`.
pub fn generate_dataset(
    rng: &mut impl Rng,
    n_molecules: usize,
    nodes_range: (usize, usize),
    box_scale: f64,
) -> Result<ToyDataset> {
    let cfg = DatasetConfig {
        n_molecules,
        nodes_min: nodes_range.0,
        nodes_max: nodes_range.1,
        box_scale,
        seed: 0,
    };
    cfg.validate()?;
    let mut molecules = Vec::with_capacity(n_molecules);
    for _ in 0..n_molecules {
        let n = rng.gen_range(nodes_range.0..=nodes_range.1);
        let positions = sample_positions(rng, n, box_scale)?;
        let charges = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        molecules.push(Molecule::new(positions, charges));
    }
    Ok(ToyDataset {
        split: Split::standard(n_molecules),
        molecules,
    })
}

fn sample_positions(rng: &mut impl Rng, n: usize, box_scale: f64) -> Result<Vec<[f64; 3]>> {
    for _ in 0..MAX_RESAMPLES {
        let mut pos: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                [
                    rng.gen_range(0.0..box_scale),
                    rng.gen_range(0.0..box_scale),
                    rng.gen_range(0.0..box_scale),
                ]
            })
            .collect();
        let nn: Vec<f64> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| distance(&pos[i], &pos[j]))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let mean_nn = nn.iter().sum::<f64>() / n as f64;
        let min_nn = nn.iter().copied().fold(f64::INFINITY, f64::min);
        if !(mean_nn > 0.0) || min_nn / mean_nn < MIN_SEPARATION {
            continue;
        }
        for p in &mut pos {
            for v in p.iter_mut() {
                *v /= mean_nn;
            }
        }
        return Ok(pos);
    }
    Err(Error::CheckFailed(format!("could not place {n} separated nodes")))
}

impl ToyDataset {
    pub fn generate(cfg: &DatasetConfig) -> Result<Self> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
        generate_dataset(&mut rng, cfg.n_molecules, (cfg.nodes_min, cfg.nodes_max), cfg.box_scale)
    }

    pub fn len(&self) -> usize {
        self.molecules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.molecules.is_empty()
    }

    /// Largest deviation between stored and recomputed targets.
    pub fn target_error(&self) -> f64 {
        let mut err = 0.0f64;
        for m in &self.molecules {
            let t = Targets::compute(&m.positions, &m.charges);
            for kind in TargetKind::ALL {
                for (a, b) in t.flat(kind).iter().zip(m.targets.flat(kind)) {
                    err = err.max((a - b).abs());
                }
            }
        }
        err
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        for m in &self.molecules {
            serde_json::to_writer(&mut w, m)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads molecules and assigns the standard split.
    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut molecules = Vec::new();
        for (i, line) in file.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let m: Molecule = serde_json::from_str(&line)
                .map_err(|e| Error::config(format!("{}:{}", path.display(), i + 1), e.to_string()))?;
            if m.positions.len() != m.charges.len() {
                return Err(Error::config(format!("{}:{}", path.display(), i + 1), "positions and charges differ in length"));
            }
            molecules.push(m);
        }
        Ok(Self {
            split: Split::standard(molecules.len()),
            molecules,
        })
    }
}

/// Molecules `indices` as one batched graph with charges as node inputs,
/// plus `[len, target_dim]` targets.
pub fn make_batch(molecules: &[&Molecule], kind: TargetKind, cutoff: f64) -> Result<(Graph, Vec<f64>)> {
    let mut pos = Vec::new();
    let mut q = Vec::new();
    let mut ids = Vec::new();
    let mut targets = Vec::with_capacity(molecules.len() * kind.dim());
    for (b, m) in molecules.iter().enumerate() {
        pos.extend_from_slice(&m.positions);
        q.extend_from_slice(&m.charges);
        ids.extend(std::iter::repeat(b).take(m.len()));
        targets.extend(m.targets.flat(kind));
    }
    Ok((Graph::new(pos, q, 1, ids, cutoff)?, targets))
}
