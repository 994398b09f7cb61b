//! Parse rep specs, act on features with Wigner-D and Cartesian actions,
//! and check the homomorphism property numerically.
//!
//!     cargo run --example rep_specs

use locanon::group::{compose, random_element, random_rotation};
use locanon::reps::{apply_rep, parse_repspec, wigner_d, RepKind};
use locanon::GroupElement;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> locanon::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    for text in ["8x0p+4x1n", "2x0n+1x1p+1x2n"] {
        for kind in [RepKind::Cartesian, RepKind::Irrep] {
            let spec = parse_repspec(text, kind)?;
            println!("{:<9} {spec:<16} total_dim {}", kind.name(), spec.total_dim());
        }
    }

    // Rank-1 Wigner block is the rotation itself with axes reordered to (y, z, x).
    let g = random_rotation(&mut rng);
    println!("\nD1(g) =\n{:.4}", wigner_d(1, &g)?);
    println!("g     =\n{:.4}", g.matrix());

    // Pseudo-vectors ignore inversion, normal vectors flip.
    let v = [1.0, 2.0, 3.0];
    let inv = GroupElement::inversion();
    let normal = apply_rep(&parse_repspec("1x1n", RepKind::Irrep)?, &inv, &v)?;
    let pseudo = apply_rep(&parse_repspec("1x1p", RepKind::Irrep)?, &inv, &v)?;
    println!("inversion on 1x1n: {normal:?}, on 1x1p: {pseudo:?}");

    // rho(g1 g2) f == rho(g1) rho(g2) f for a mixed spec
    let spec = parse_repspec("2x0n+1x1p+1x2n+1x3n", RepKind::Cartesian)?;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (g1, g2) = (random_element(&mut rng), random_element(&mut rng));
        let f: Vec<f64> = (0..spec.total_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs = apply_rep(&spec, &compose(&g1, &g2), &f)?;
        let rhs = apply_rep(&spec, &g1, &apply_rep(&spec, &g2, &f)?)?;
        for (a, b) in lhs.iter().zip(&rhs) {
            worst = worst.max((a - b).abs());
        }
    }
    println!("homomorphism error on {spec}: {worst:.2e}");
    Ok(())
}
