//! Split Cartesian tensors into irreducible pieces with the numerically
//! computed intertwiners.
//!
//!     cargo run --example decompose_tensor

use locanon::group::random_rotation;
use locanon::reps::{cartesian_to_irrep_spec, decompose_cartesian, parse_repspec, RepKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> locanon::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for order in 0..=4 {
        let q = decompose_cartesian(order)?;
        let residual = (0..20)
            .map(|_| q.residual_for(&random_rotation(&mut rng)))
            .fold(0.0f64, f64::max);
        println!("order {order}: {:<28} residual {residual:.1e}", q.multiset_string());
    }

    // A symmetric matrix has no antisymmetric (degree 1) part.
    let q = decompose_cartesian(2)?;
    let a = [2.0, 1.0, 0.5, 1.0, -1.0, 0.0, 0.5, 0.0, 3.0];
    let parts = q.to_irreps(&a);
    println!("\nsymmetric 3x3 -> scalar {:.4}, vector {:.1e}, degree-2 {:.4?}", parts[0], parts[1..4].iter().map(|x| x.abs()).fold(0.0, f64::max), &parts[4..]);
    let trace = a[0] + a[4] + a[8];
    println!("trace / sqrt(3) = {:.4}", trace / 3f64.sqrt());
    let back = q.to_cartesian(&parts);
    println!("round trip error {:.1e}", back.iter().zip(&a).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));

    let hidden = parse_repspec("8x0n+4x1n+2x2n", RepKind::Cartesian)?;
    println!("\n{hidden} (cartesian) ~ {} (irrep)", cartesian_to_irrep_spec(&hidden)?);
    Ok(())
}
