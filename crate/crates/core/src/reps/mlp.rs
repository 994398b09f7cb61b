//! Learned stand-in for `ρ(g)`: an MLP on the flattened transition matrix
//! concatenated with the features. No homomorphism property is enforced.

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::nn::layers::{mlp, mlp_depth};
use crate::nn::params::ParamStore;
use crate::nn::tape::{Tape, Var};
use crate::nn::tensor::Tensor;

/// Registers an MLP `(9 + dim) → hidden… → dim` under `name`.
pub fn init_mlp_rep(
    params: &mut ParamStore,
    name: &str,
    dim: usize,
    hidden: &[usize],
    rng: &mut impl rand::Rng,
) {
    params.init_mlp(name, 9 + dim, hidden, dim, rng);
}

/// Row-wise `MLP(flatten(gₑ) ∥ fₑ)` for `transitions` `[E, 9]` and `features` `[E, d]`.
pub fn mlp_rep(tape: &mut Tape, params: &ParamStore, name: &str, transitions: Var, features: Var) -> Result<Var> {
    let (e, nine) = tape.shape(transitions);
    let (ef, d) = tape.shape(features);
    if nine != 9 || e != ef {
        return Err(Error::shape(format!("[{ef}, 9] transitions"), format!("[{e}, {nine}]")));
    }
    let first = format!("{name}.0.weight");
    let last = format!("{name}.{}.weight", mlp_depth(params, name).saturating_sub(1));
    let (Some(w0), Some(wl)) = (params.value(&first), params.value(&last)) else {
        return Err(Error::UnknownParam(first));
    };
    if w0.cols() != 9 + d || wl.rows() != d {
        return Err(Error::shape(
            format!("MLP {} -> {d}", 9 + d),
            format!("MLP {} -> {}", w0.cols(), wl.rows()),
        ));
    }
    let x = tape.concat(&[transitions, features])?;
    mlp(tape, params, name, x)
}

/// Single-sample convenience wrapper around [`mlp_rep`].
pub fn mlp_rep_apply(
    params: &ParamStore,
    name: &str,
    transition: &GroupElement,
    features: &[f64],
) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let g = tape.constant(Tensor::row_vector(transition.to_row_major().to_vec()));
    let f = tape.constant(Tensor::row_vector(features.to_vec()));
    let y = mlp_rep(&mut tape, params, name, g, f)?;
    Ok(tape.value(y).data().to_vec())
}
