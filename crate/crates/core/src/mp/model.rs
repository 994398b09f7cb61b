//! Full network: input embedding, stacked residual attention layers, per-node
//! readout, de-canonicalization and sum pooling per molecule.

use std::rc::Rc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embeddings::BesselConfig;
use crate::error::{Error, Result};
use crate::frames::{compute_frames, FrameWeights, LocalFrames};
use crate::mp::config::{MessageMode, ModelConfig};
use crate::mp::graph::{complete_graph, radius_graph, Graph};
use crate::mp::layers::{init_locaformer_layer, locaformer_layer, AttentionDims, EdgeContext, Noise};
use crate::mp::transport::RowActions;
use crate::nn::layers::{linear, mlp};
use crate::nn::params::ParamStore;
use crate::nn::tape::{Tape, Var};
use crate::nn::tensor::Tensor;

const EMBED: &str = "embed";
const FRAMES: &str = "frames";
const READOUT: &str = "readout";

#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub mode: MessageMode,
    pub bessel: BesselConfig,
    pub params: ParamStore,
}

/// Validates `config` and initializes parameters from `seed`.
pub fn build_model(config: &ModelConfig, seed: u64) -> Result<Model> {
    config.validate()?;
    let mode = config.message_mode()?;
    let bessel = config.bessel();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamStore::new();
    let d = mode.dim();
    let dims = AttentionDims {
        feature: d,
        heads: config.num_heads,
        attention: config.attention_dim,
        value: config.value_dim,
        embedding: bessel.num_radial + bessel.angular_dim(),
    };
    bessel.init_params(&mut params, EMBED);
    params.init_linear(&format!("{EMBED}.input"), config.input_dim, d, &mut rng);
    for k in 0..config.num_layers {
        init_locaformer_layer(
            &mut params,
            &layer_name(k),
            &mode,
            dims,
            config.ffn_hidden,
            &config.attention_hidden,
            &config.gate_hidden,
            &config.rho_hidden,
            &mut rng,
        );
    }
    params.init_mlp(READOUT, d, &config.readout_hidden, config.target.dim(), &mut rng);
    if config.learned_frames {
        FrameWeights::init(&mut params, FRAMES, &bessel, &[16], &mut rng);
        // Frame weights get no gradient; keep them out of the optimizer.
        for name in params.names() {
            if name.starts_with("frames.") {
                params.set_learnable(&name, false)?;
            }
        }
    }
    Ok(Model {
        config: config.clone(),
        mode,
        bessel,
        params,
    })
}

fn layer_name(k: usize) -> String {
    format!("layer{k}")
}

impl Model {
    /// Width of the hidden features.
    pub fn dim(&self) -> usize {
        self.mode.dim()
    }

    /// Edges used for frame prediction.
    pub fn frame_edges(&self, graph: &Graph) -> Vec<(usize, usize)> {
        match self.config.frame_cutoff {
            Some(c) => radius_graph(&graph.positions, &graph.batch_ids, c),
            None => complete_graph(&graph.batch_ids),
        }
    }

    /// Predicted local frames for every node of `graph`.
    pub fn frames(&self, params: &ParamStore, graph: &Graph) -> Result<LocalFrames> {
        let edges = self.frame_edges(graph);
        if self.config.learned_frames {
            let w = FrameWeights {
                params,
                name: FRAMES,
                bessel: &self.bessel,
            };
            compute_frames(&graph.positions, &edges, Some(&w))
        } else {
            compute_frames(&graph.positions, &edges, None)
        }
    }

    /// Per-molecule predictions `[num_graphs, target_dim]` on `tape`.
    /// `noise` enables attention dropout and stochastic depth.
    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &ParamStore,
        graph: &Graph,
        frames: &LocalFrames,
        mut noise: Option<&mut ChaCha8Rng>,
    ) -> Result<Var> {
        let cfg = &self.config;
        if graph.feature_dim != cfg.input_dim {
            return Err(Error::shape(format!("{} input features", cfg.input_dim), graph.feature_dim));
        }
        let ctx = EdgeContext::new(
            tape,
            params,
            EMBED,
            &self.mode,
            &self.bessel,
            &graph.positions,
            &graph.edges,
            frames,
        )?;
        // Inputs are per-node scalars, so canonicalizing them is the identity.
        let x = tape.constant(Tensor::from_vec(graph.num_nodes(), cfg.input_dim, graph.node_features.clone()));
        let mut h = linear(tape, params, &format!("{EMBED}.input"), x)?;
        for k in 0..cfg.num_layers {
            let mut n = noise.as_deref_mut().map(|rng| Noise {
                rng,
                attention_dropout: cfg.attention_dropout,
                stochastic_depth: cfg.stochastic_depth,
            });
            h = locaformer_layer(
                tape,
                params,
                &layer_name(k),
                &ctx,
                &graph.batch_ids,
                h,
                cfg.num_heads,
                n.as_mut(),
            )?;
        }
        let y = mlp(tape, params, READOUT, h)?;
        let out_spec = cfg.target.output_spec();
        let y = RowActions::node_frames_inverse(&out_spec, frames)?.apply(tape, y)?;
        tape.scatter_sum(y, Rc::new(graph.batch_ids.clone()), graph.num_graphs())
    }

    /// Forward pass with predicted frames and no training noise.
    pub fn predict(&self, graph: &Graph) -> Result<Tensor> {
        let frames = self.frames(&self.params, graph)?;
        let mut tape = Tape::new();
        let y = self.forward(&mut tape, &self.params, graph, &frames, None)?;
        Ok(tape.value(y).clone())
    }
}
