//! Equivariant message passing on cutoff graphs.

pub mod config;
pub mod graph;
pub mod layers;
pub mod model;
pub mod transport;
pub mod wrapper;

pub use config::{MessageMode, ModeKind, ModelConfig, TargetKind};
pub use graph::{complete_graph, radius_graph, Graph};
pub use layers::{attention_block, attention_weights, edge_layer, locaformer_layer, EdgeContext};
pub use model::{build_model, Model};
pub use transport::RowActions;
pub use wrapper::{ArgKind, EdgeArgs, TfMessagePassing};

#[cfg(test)]
mod tests;
