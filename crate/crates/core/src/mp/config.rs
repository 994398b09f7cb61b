use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embeddings::BesselConfig;
use crate::error::{Error, Result};
use crate::reps::decompose::cartesian_to_irrep_spec;
use crate::reps::spec::{parse_repspec, RepKind, RepSpec};

/// How features travel from a sender's frame to the receiver's frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    /// No transport; every channel is treated as a scalar.
    Scalar,
    Cartesian,
    Irrep,
    /// Learned map of the transition matrix and the features.
    Mlp,
}

impl ModeKind {
    pub const ALL: [ModeKind; 4] = [ModeKind::Scalar, ModeKind::Cartesian, ModeKind::Irrep, ModeKind::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            ModeKind::Scalar => "scalar",
            ModeKind::Cartesian => "cartesian",
            ModeKind::Irrep => "irrep",
            ModeKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModeKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config("mode", format!("unknown mode {s:?}")))
    }
}

/// A mode together with the layout of the hidden features it transports.
#[derive(Debug, Clone, PartialEq)]
pub enum MessageMode {
    Scalar(RepSpec),
    Cartesian(RepSpec),
    Irrep(RepSpec),
    Mlp(RepSpec),
}

impl MessageMode {
    /// Resolves a mode from a Cartesian layout string. Irrep mode uses the
    /// decomposed equivalent, scalar mode the same number of scalars, and
    /// MLP mode the same width.
    pub fn from_cartesian(kind: ModeKind, hidden: &str) -> Result<Self> {
        let cart = parse_repspec(hidden, RepKind::Cartesian)?;
        Ok(match kind {
            ModeKind::Scalar => MessageMode::Scalar(RepSpec::scalars(RepKind::Cartesian, cart.total_dim())),
            ModeKind::Cartesian => MessageMode::Cartesian(cart),
            ModeKind::Irrep => MessageMode::Irrep(cartesian_to_irrep_spec(&cart)?),
            ModeKind::Mlp => MessageMode::Mlp(cart),
        })
    }

    pub fn kind(&self) -> ModeKind {
        match self {
            MessageMode::Scalar(_) => ModeKind::Scalar,
            MessageMode::Cartesian(_) => ModeKind::Cartesian,
            MessageMode::Irrep(_) => ModeKind::Irrep,
            MessageMode::Mlp(_) => ModeKind::Mlp,
        }
    }

    pub fn spec(&self) -> &RepSpec {
        match self {
            MessageMode::Scalar(s) | MessageMode::Cartesian(s) | MessageMode::Irrep(s) | MessageMode::Mlp(s) => s,
        }
    }

    pub fn dim(&self) -> usize {
        self.spec().total_dim()
    }
}

/// Kind of per-molecule prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Scalar,
    Vector,
    Tensor,
}

impl TargetKind {
    pub const ALL: [TargetKind; 3] = [TargetKind::Scalar, TargetKind::Vector, TargetKind::Tensor];

    pub fn dim(self) -> usize {
        match self {
            TargetKind::Scalar => 1,
            TargetKind::Vector => 3,
            TargetKind::Tensor => 9,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TargetKind::Scalar => "scalar",
            TargetKind::Vector => "vector",
            TargetKind::Tensor => "tensor",
        }
    }

    /// Layout of one node's output before pooling.
    pub fn output_spec(self) -> RepSpec {
        let text = match self {
            TargetKind::Scalar => "1x0n",
            TargetKind::Vector => "1x1n",
            TargetKind::Tensor => "1x2n",
        };
        parse_repspec(text, RepKind::Cartesian).expect("static spec")
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TargetKind::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::config("target", format!("unknown target {s:?}")))
    }
}

/// Network hyperparameters. Defaults follow the full-size architecture;
/// [`ModelConfig::toy`] is the desk-scale variant used by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub mode: ModeKind,
    /// Cartesian layout of the hidden features (see [`MessageMode::from_cartesian`]).
    pub hidden_rep: String,
    pub num_layers: usize,
    pub num_heads: usize,
    pub attention_dim: usize,
    pub value_dim: usize,
    pub ffn_hidden: usize,
    pub gate_hidden: Vec<usize>,
    pub attention_hidden: Vec<usize>,
    /// Hidden widths of the learned transport in MLP mode.
    pub rho_hidden: Vec<usize>,
    pub readout_hidden: Vec<usize>,
    pub cutoff: f64,
    /// Neighborhood used for frame prediction; `None` means the whole molecule.
    pub frame_cutoff: Option<f64>,
    pub num_radial: usize,
    pub num_angular: usize,
    pub envelope_degree: u32,
    pub attention_dropout: f64,
    pub stochastic_depth: f64,
    /// Frame weights from small MLPs instead of `1/r²` and `1/r`.
    pub learned_frames: bool,
    pub input_dim: usize,
    pub target: TargetKind,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            mode: ModeKind::Cartesian,
            hidden_rep: "8x0n+4x1n+2x2n".into(),
            num_layers: 5,
            num_heads: 4,
            attention_dim: 48,
            value_dim: 96,
            ffn_hidden: 512,
            gate_hidden: vec![64],
            attention_hidden: vec![32],
            rho_hidden: vec![64],
            readout_hidden: vec![512, 128, 32],
            cutoff: 5.0,
            frame_cutoff: None,
            num_radial: 32,
            num_angular: 20,
            envelope_degree: 6,
            attention_dropout: 0.1,
            stochastic_depth: 0.05,
            learned_frames: false,
            input_dim: 1,
            target: TargetKind::Scalar,
        }
    }
}

impl ModelConfig {
    /// Three layers and narrow widths.
    pub fn toy() -> Self {
        Self {
            num_layers: 3,
            attention_dim: 16,
            value_dim: 32,
            ffn_hidden: 64,
            gate_hidden: vec![32],
            attention_hidden: vec![16],
            rho_hidden: vec![32],
            readout_hidden: vec![64, 32],
            cutoff: 2.0,
            num_radial: 8,
            num_angular: 4,
            ..Self::default()
        }
    }

    pub fn bessel(&self) -> BesselConfig {
        BesselConfig {
            envelope_degree: self.envelope_degree,
            ..BesselConfig::new(self.num_radial, self.num_angular, self.cutoff)
        }
    }

    pub fn message_mode(&self) -> Result<MessageMode> {
        MessageMode::from_cartesian(self.mode, &self.hidden_rep).map_err(|e| match e {
            Error::MalformedSpec { .. } | Error::UnsupportedDegree { .. } => {
                Error::config("hidden_rep", e.to_string())
            }
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.message_mode()?;
        self.bessel().validate()?;
        let positive = [
            ("num_heads", self.num_heads),
            ("attention_dim", self.attention_dim),
            ("value_dim", self.value_dim),
            ("ffn_hidden", self.ffn_hidden),
            ("input_dim", self.input_dim),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(Error::config(field, "must be positive"));
            }
        }
        for (field, v) in [("attention_dim", self.attention_dim), ("value_dim", self.value_dim)] {
            if v % self.num_heads != 0 {
                return Err(Error::config(field, format!("must be divisible by num_heads = {}", self.num_heads)));
            }
        }
        for (field, p) in [
            ("attention_dropout", self.attention_dropout),
            ("stochastic_depth", self.stochastic_depth),
        ] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::config(field, "must lie in [0, 1)"));
            }
        }
        if let Some(fc) = self.frame_cutoff {
            if !(fc > 0.0) {
                return Err(Error::config("frame_cutoff", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ModelConfig = serde_json::from_str(text).map_err(|e| Error::config("model", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
