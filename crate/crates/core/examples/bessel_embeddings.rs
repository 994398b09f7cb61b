//! Radial and angular Bessel-style embeddings with the smooth cutoff envelope.
//!
//!     cargo run --example bessel_embeddings

use locanon::embeddings::{angular_embed, envelope, radial_embed, BesselConfig};

fn main() -> locanon::Result<()> {
    let cfg = BesselConfig::new(6, 3, 5.0);
    cfg.validate()?;
    println!("{:>6} {:>10}", "x", "envelope");
    for k in 0..=10 {
        let x = k as f64 / 10.0;
        println!("{x:>6.2} {:>10.6}", envelope(x, cfg.envelope_degree));
    }

    println!("\nradial embedding");
    for r in [0.5, 1.0, 2.5, 4.9, 5.0] {
        let e = radial_embed(&cfg, r)?;
        println!("r = {r:<4} {:.4?}", e);
    }

    // One block per axis, each odd in its own coordinate.
    let u = [0.6, 0.0, -0.8];
    println!("\nangular({u:?}) = {:.4?}", angular_embed(&cfg, &u)?);
    println!("embedding width {}", cfg.num_radial + cfg.angular_dim());
    Ok(())
}
