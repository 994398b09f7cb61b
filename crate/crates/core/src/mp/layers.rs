//! EDGE layer, attention block and the residual block that stacks them.

use std::rc::Rc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::embeddings::{angular_embed_tape, radial_embed_tape, BesselConfig};
use crate::error::{Error, Result};
use crate::frames::{transition_unchecked, LocalFrames};
use crate::mp::config::MessageMode;
use crate::mp::graph::{distance, sub};
use crate::mp::transport::RowActions;
use crate::nn::layers::{layernorm, linear, mlp};
use crate::nn::params::ParamStore;
use crate::nn::tape::{Tape, Var};
use crate::nn::tensor::Tensor;
use crate::reps::mlp::mlp_rep;

/// How a layer moves sender features into the receiver's frame.
enum Transport {
    Identity,
    Rep(RowActions),
    /// Flattened transition matrices, `[E, 9]`.
    Learned(Var),
}

/// Per-forward edge data shared by every layer: indices, transports and
/// the invariant edge embedding `radial(r) ∥ angular(Fᵢ·r̂)`.
pub struct EdgeContext {
    pub num_nodes: usize,
    pub src: Rc<Vec<usize>>,
    pub dst: Rc<Vec<usize>>,
    /// `[E, num_radial + 3·num_angular]`.
    pub embedding: Var,
    /// 1.0 for nodes with at least one incoming edge.
    pub has_incoming: Rc<Vec<f64>>,
    transport: Transport,
}

impl EdgeContext {
    /// `freq_name` names the `{freq_name}.radial_freq` / `.angular_freq` parameters.
    pub fn new(
        tape: &mut Tape,
        params: &ParamStore,
        freq_name: &str,
        mode: &MessageMode,
        bessel: &BesselConfig,
        positions: &[[f64; 3]],
        edges: &[(usize, usize)],
        frames: &LocalFrames,
    ) -> Result<Self> {
        let n = positions.len();
        if frames.len() != n {
            return Err(Error::shape(format!("{n} frames"), frames.len()));
        }
        let mut dists = Vec::with_capacity(edges.len());
        let mut units = Vec::with_capacity(edges.len());
        for &(s, d) in edges {
            let r = distance(&positions[s], &positions[d]);
            let rel = sub(&positions[s], &positions[d]);
            let u = frames.matrix(d) * nalgebra::Vector3::new(rel[0] / r, rel[1] / r, rel[2] / r);
            dists.push(r);
            units.push([u[0], u[1], u[2]]);
        }
        let fr = tape.param(params, &format!("{freq_name}.radial_freq"))?;
        let fa = tape.param(params, &format!("{freq_name}.angular_freq"))?;
        let radial = radial_embed_tape(tape, bessel, fr, Rc::new(dists))?;
        let angular = angular_embed_tape(tape, bessel, fa, Rc::new(units))?;
        let embedding = tape.concat(&[radial, angular])?;

        let transport = match mode {
            MessageMode::Scalar(_) => Transport::Identity,
            MessageMode::Cartesian(spec) | MessageMode::Irrep(spec) => {
                Transport::Rep(RowActions::edge_transitions(spec, frames, edges)?)
            }
            MessageMode::Mlp(_) => {
                let mut flat = Vec::with_capacity(9 * edges.len());
                for &(s, d) in edges {
                    flat.extend(transition_unchecked(frames, d, s).to_row_major());
                }
                Transport::Learned(tape.constant(Tensor::from_vec(edges.len(), 9, flat)))
            }
        };
        let mut has_incoming = vec![0.0; n];
        for &(_, d) in edges {
            has_incoming[d] = 1.0;
        }
        Ok(Self {
            num_nodes: n,
            src: Rc::new(edges.iter().map(|e| e.0).collect()),
            dst: Rc::new(edges.iter().map(|e| e.1).collect()),
            embedding,
            has_incoming: Rc::new(has_incoming),
            transport,
        })
    }

    pub fn num_edges(&self) -> usize {
        self.src.len()
    }

    /// `ρ(F_dst·F_srcᵀ)·x_src` per edge, `[E, d]`. `rho_name` names the learned
    /// transport in MLP mode.
    pub fn transported(&self, tape: &mut Tape, params: &ParamStore, rho_name: &str, x: Var) -> Result<Var> {
        let xj = tape.gather(x, self.src.clone())?;
        match &self.transport {
            Transport::Identity => Ok(xj),
            Transport::Rep(actions) => actions.apply(tape, xj),
            Transport::Learned(g) => mlp_rep(tape, params, rho_name, *g, xj),
        }
    }
}

/// Widths of one EDGE layer.
#[derive(Debug, Clone, Copy)]
pub struct EdgeDims {
    pub feature: usize,
    pub value: usize,
    pub embedding: usize,
}

/// Registers `{name}.B`, `{name}.gate`, `{name}.A` and, in MLP mode, `{name}.rho`.
pub fn init_edge_layer(
    params: &mut ParamStore,
    name: &str,
    mode: &MessageMode,
    dims: EdgeDims,
    gate_hidden: &[usize],
    rho_hidden: &[usize],
    rng: &mut impl Rng,
) {
    params.init_linear(&format!("{name}.B"), dims.feature, dims.value, rng);
    params.init_mlp(&format!("{name}.gate"), dims.embedding, gate_hidden, dims.value, rng);
    params.init_linear(&format!("{name}.A"), dims.value, dims.feature, rng);
    if let MessageMode::Mlp(_) = mode {
        params.init_mlp(&format!("{name}.rho"), 9 + dims.feature, rho_hidden, dims.feature, rng);
    }
}

/// `B·ρ(gᵢⱼ)fⱼ ⊙ gate(embedding)` per edge, `[E, value]`.
fn edge_values(tape: &mut Tape, params: &ParamStore, name: &str, ctx: &EdgeContext, x: Var) -> Result<Var> {
    let t = ctx.transported(tape, params, &format!("{name}.rho"), x)?;
    values_from(tape, params, name, ctx, t)
}

fn values_from(tape: &mut Tape, params: &ParamStore, name: &str, ctx: &EdgeContext, t: Var) -> Result<Var> {
    let b = linear(tape, params, &format!("{name}.B"), t)?;
    let gate = mlp(tape, params, &format!("{name}.gate"), ctx.embedding)?;
    tape.mul(b, gate)
}

/// One message per edge: `A(B·ρ(gᵢⱼ)fⱼ ⊙ gate(radial ∥ angular))`, `[E, d]`.
pub fn edge_layer(tape: &mut Tape, params: &ParamStore, name: &str, ctx: &EdgeContext, x: Var) -> Result<Var> {
    let v = edge_values(tape, params, name, ctx, x)?;
    linear(tape, params, &format!("{name}.A"), v)
}

/// Widths of one attention block.
#[derive(Debug, Clone, Copy)]
pub struct AttentionDims {
    pub feature: usize,
    pub heads: usize,
    pub attention: usize,
    pub value: usize,
    pub embedding: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn init_attention(
    params: &mut ParamStore,
    name: &str,
    mode: &MessageMode,
    dims: AttentionDims,
    score_hidden: &[usize],
    gate_hidden: &[usize],
    rho_hidden: &[usize],
    rng: &mut impl Rng,
) {
    params.init_linear(&format!("{name}.q"), dims.feature, dims.attention, rng);
    params.init_linear(&format!("{name}.k"), dims.feature, dims.attention, rng);
    params.init_mlp(&format!("{name}.score"), dims.heads + dims.embedding, score_hidden, dims.heads, rng);
    let edge = EdgeDims {
        feature: dims.feature,
        value: dims.value,
        embedding: dims.embedding,
    };
    init_edge_layer(params, name, mode, edge, gate_hidden, rho_hidden, rng);
}

/// Randomness used only while training.
pub struct Noise<'a> {
    pub rng: &'a mut ChaCha8Rng,
    pub attention_dropout: f64,
    pub stochastic_depth: f64,
}

/// `[rows, cols]` indicator with `cols / rows` consecutive ones per row.
fn block_indicator(rows: usize, cols: usize, scale: f64) -> Tensor {
    let w = cols / rows;
    let mut t = Tensor::zeros(rows, cols);
    for c in 0..cols {
        t.set(c / w, c, scale);
    }
    t
}

/// Attention weights `[E, heads]`, softmax-normalized over each node's incoming edges.
pub fn attention_weights(
    tape: &mut Tape,
    params: &ParamStore,
    name: &str,
    ctx: &EdgeContext,
    x: Var,
    heads: usize,
    noise: Option<&mut Noise>,
) -> Result<Var> {
    let t = ctx.transported(tape, params, &format!("{name}.rho"), x)?;
    weights_from(tape, params, name, ctx, x, t, heads, noise)
}

#[allow(clippy::too_many_arguments)]
fn weights_from(
    tape: &mut Tape,
    params: &ParamStore,
    name: &str,
    ctx: &EdgeContext,
    x: Var,
    t: Var,
    heads: usize,
    noise: Option<&mut Noise>,
) -> Result<Var> {
    let q = linear(tape, params, &format!("{name}.q"), x)?;
    let qi = tape.gather(q, ctx.dst.clone())?;
    let k = linear(tape, params, &format!("{name}.k"), t)?;
    let qk = tape.mul(qi, k)?;
    let att = tape.shape(q).1;
    let per_head = block_indicator(heads, att, 1.0 / ((att / heads) as f64).sqrt()).transpose();
    let dots = tape.matmul_const(qk, Rc::new(per_head))?;
    let score_in = tape.concat(&[dots, ctx.embedding])?;
    let logits = mlp(tape, params, &format!("{name}.score"), score_in)?;
    let alpha = tape.segment_softmax(logits, ctx.dst.clone(), ctx.num_nodes)?;
    match noise {
        Some(n) if n.attention_dropout > 0.0 => {
            let keep = 1.0 - n.attention_dropout;
            let (e, h) = tape.shape(alpha);
            let mask: Vec<f64> = (0..e * h)
                .map(|_| if n.rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                .collect();
            let m = tape.constant(Tensor::from_vec(e, h, mask));
            tape.mul(alpha, m)
        }
        _ => Ok(alpha),
    }
}

/// Multi-head attention over incoming edges. Returns the per-node update,
/// which is zero at nodes without incoming edges.
pub fn attention_block(
    tape: &mut Tape,
    params: &ParamStore,
    name: &str,
    ctx: &EdgeContext,
    x: Var,
    heads: usize,
    noise: Option<&mut Noise>,
) -> Result<Var> {
    let t = ctx.transported(tape, params, &format!("{name}.rho"), x)?;
    let alpha = weights_from(tape, params, name, ctx, x, t, heads, noise)?;
    let v = values_from(tape, params, name, ctx, t)?;
    let value = tape.shape(v).1;
    if value % heads != 0 {
        return Err(Error::shape(format!("value width divisible by {heads}"), value));
    }
    let expand = tape.matmul_const(alpha, Rc::new(block_indicator(heads, value, 1.0)))?;
    let weighted = tape.mul(v, expand)?;
    let agg = tape.scatter_sum(weighted, ctx.dst.clone(), ctx.num_nodes)?;
    let out = linear(tape, params, &format!("{name}.A"), agg)?;
    tape.scale_rows(out, ctx.has_incoming.clone())
}

/// Pre-norm residual block: `x + Attn(LN(x))`, then `x + MLP(LN(x))`.
/// While training each branch is dropped per molecule with the stochastic
/// depth rate and rescaled otherwise.
pub fn locaformer_layer(
    tape: &mut Tape,
    params: &ParamStore,
    name: &str,
    ctx: &EdgeContext,
    batch_ids: &[usize],
    x: Var,
    heads: usize,
    mut noise: Option<&mut Noise>,
) -> Result<Var> {
    let h = layernorm(tape, params, &format!("{name}.ln1"), x)?;
    let a = attention_block(tape, params, &format!("{name}.attn"), ctx, h, heads, noise.as_deref_mut())?;
    let a = drop_path(tape, a, batch_ids, noise.as_deref_mut())?;
    let x = tape.add(x, a)?;
    let h = layernorm(tape, params, &format!("{name}.ln2"), x)?;
    let m = mlp(tape, params, &format!("{name}.ffn"), h)?;
    let m = drop_path(tape, m, batch_ids, noise)?;
    tape.add(x, m)
}

fn drop_path(tape: &mut Tape, x: Var, batch_ids: &[usize], noise: Option<&mut Noise>) -> Result<Var> {
    let Some(n) = noise else { return Ok(x) };
    if n.stochastic_depth <= 0.0 {
        return Ok(x);
    }
    let keep = 1.0 - n.stochastic_depth;
    let graphs = batch_ids.last().map_or(0, |b| b + 1);
    let per_graph: Vec<f64> = (0..graphs)
        .map(|_| if n.rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect();
    tape.scale_rows(x, Rc::new(batch_ids.iter().map(|&b| per_graph[b]).collect()))
}

#[allow(clippy::too_many_arguments)]
pub fn init_locaformer_layer(
    params: &mut ParamStore,
    name: &str,
    mode: &MessageMode,
    dims: AttentionDims,
    ffn_hidden: usize,
    score_hidden: &[usize],
    gate_hidden: &[usize],
    rho_hidden: &[usize],
    rng: &mut impl Rng,
) {
    params.init_layernorm(&format!("{name}.ln1"), dims.feature);
    params.init_layernorm(&format!("{name}.ln2"), dims.feature);
    init_attention(params, &format!("{name}.attn"), mode, dims, score_hidden, gate_hidden, rho_hidden, rng);
    params.init_mlp(&format!("{name}.ffn"), dims.feature, &[ffn_hidden], dims.feature, rng);
}
