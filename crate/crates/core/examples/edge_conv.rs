//! An EdgeConv-style layer written against the typed message-passing
//! wrapper. The message MLP sees only receiver-frame quantities, so its
//! output is invariant even though the MLP itself knows nothing about
//! rotations.
//!
//!     cargo run --example edge_conv

use std::collections::BTreeMap;

use locanon::frames::{canonicalize, compute_frames};
use locanon::group::random_rotation;
use locanon::mp::{complete_graph, radius_graph, TfMessagePassing};
use locanon::nn::{mlp, ParamStore, Tape, Tensor};
use locanon::reps::{apply_rep, parse_repspec, RepKind};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> locanon::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 10;
    let feat = parse_repspec("3x0n+2x1n", RepKind::Cartesian)?;
    let d = feat.total_dim();
    let mut params = ParamStore::new();
    params.init_mlp("conv", 2 * d + 3, &[32], 8, &mut rng);
    let layer = TfMessagePassing::new()
        .local("h", feat.clone())
        .global("pos", parse_repspec("1x1n", RepKind::Cartesian)?);

    let pos: Vec<[f64; 3]> = (0..n).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
    let glob: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let forward = |pos: &[[f64; 3]], glob: &[f64]| -> locanon::Result<Tensor> {
        let frames = compute_frames(pos, &complete_graph(&vec![0; n]), None)?;
        let edges = radius_graph(pos, &vec![0; n], 0.8);
        let mut tape = Tape::new();
        let mut inputs = BTreeMap::new();
        let local = canonicalize(&feat, &frames, glob)?;
        inputs.insert("h".to_string(), tape.constant(Tensor::from_vec(n, d, local)));
        let flat = pos.iter().flatten().copied().collect();
        inputs.insert("pos".to_string(), tape.constant(Tensor::from_vec(n, 3, flat)));
        let out = layer.propagate(&mut tape, &frames, &edges, &inputs, |tape, a| {
            let hi = a.i("h")?;
            let dh = tape.sub(a.j("h")?, hi)?;
            let dp = tape.sub(a.j("pos")?, a.i("pos")?)?;
            let x = tape.concat(&[hi, dh, dp])?;
            mlp(tape, &params, "conv", x)
        })?;
        Ok(tape.value(out).clone())
    };

    let base = forward(&pos, &glob)?;
    let q = random_rotation(&mut rng);
    let pos2: Vec<[f64; 3]> = pos
        .iter()
        .map(|p| (q.matrix() * Vector3::from(*p) + Vector3::new(1.0, 2.0, 3.0)).into())
        .collect();
    let glob2: Vec<f64> = glob.chunks(d).flat_map(|c| apply_rep(&feat, &q, c).unwrap()).collect();
    let moved = forward(&pos2, &glob2)?;
    println!("output {:?}, max |change| under rotation + shift: {:.2e}", base.shape(), moved.max_abs_diff(&base));
    Ok(())
}
