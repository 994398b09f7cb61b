//! Local canonicalization toolkit for O(3)-equivariant message passing.

pub mod bench;
pub mod cli;
pub mod embeddings;
pub mod error;
pub mod experiments;
pub mod frames;
pub mod group;
pub mod mp;
pub mod nn;
pub mod reps;

pub use error::{Error, Result};
pub use group::GroupElement;
