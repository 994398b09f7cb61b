//! Representations of O(3): rep-spec strings, Cartesian tensors, real Wigner-D
//! matrices, direct sums, Cartesian→irrep intertwiners and the learned MLP map.

pub mod action;
pub mod cartesian;
pub mod check;
pub mod decompose;
pub mod mlp;
pub mod spec;
pub mod wigner;

pub use action::{apply_rep, RepAction};
pub use cartesian::cartesian_transform;
pub use check::{check_reps, RepCheck, CHECK_TOL};
pub use decompose::{cartesian_to_irrep_spec, decompose_cartesian, Intertwiner};
pub use mlp::{init_mlp_rep, mlp_rep, mlp_rep_apply};
pub use spec::{parse_repspec, Parity, RepBlock, RepKind, RepSpec};
pub use wigner::{wigner_d, WignerStack};
