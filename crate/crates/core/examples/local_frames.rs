//! Predict per-node frames, check that they rotate with the input, and move
//! features between the global and local frames.
//!
//!     cargo run --example local_frames

use locanon::frames::{canonicalize, compute_frames, decanonicalize, transition};
use locanon::group::random_rotation;
use locanon::mp::complete_graph;
use locanon::reps::{apply_rep, parse_repspec, RepKind};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> locanon::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 7;
    let pos: Vec<[f64; 3]> = (0..n)
        .map(|_| [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)])
        .collect();
    let edges = complete_graph(&vec![0; n]);
    let frames = compute_frames(&pos, &edges, None)?;
    println!("frame of node 0 (rows e1, e2, e3):\n{:.4}", frames.matrix(0));
    println!("degenerate nodes: {}", frames.num_degenerate());

    let q = random_rotation(&mut rng);
    let t = Vector3::new(0.3, -2.0, 1.0);
    let moved: Vec<[f64; 3]> = pos.iter().map(|p| (q.matrix() * Vector3::from(*p) + t).into()).collect();
    let frames2 = compute_frames(&moved, &edges, None)?;
    let err = (0..n)
        .map(|i| (frames2.matrix(i) - frames.matrix(i) * q.matrix().transpose()).amax())
        .fold(0.0, f64::max);
    println!("max |F(QX+t) - F(X) Q^T| = {err:.2e}");

    // Local coordinates of global features do not change under rotation.
    let spec = parse_repspec("1x0n+1x1n+1x2n", RepKind::Cartesian)?;
    let feats: Vec<f64> = (0..n * spec.total_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let rotated: Vec<f64> = feats
        .chunks(spec.total_dim())
        .flat_map(|c| apply_rep(&spec, &q, c).unwrap())
        .collect();
    let a = canonicalize(&spec, &frames, &feats)?;
    let b = canonicalize(&spec, &frames2, &rotated)?;
    let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    println!("local features before/after rotation differ by {diff:.2e}");
    let back = decanonicalize(&spec, &frames, &a)?;
    println!("round trip error {:.1e}", back.iter().zip(&feats).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));

    let g = transition(&frames, 1, 0)?;
    println!("transition 1 -> 0 has det {:+.0}", g.det());
    Ok(())
}
