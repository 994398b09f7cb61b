//! Time Wigner-D construction against the irrep and Cartesian actions.
//!
//!     cargo run --release --example bench_reps

use locanon::bench::{bench_transforms, BenchConfig};

fn main() -> locanon::Result<()> {
    let cfg = BenchConfig {
        batch: 128,
        ..BenchConfig::default()
    };
    let report = bench_transforms(&cfg)?;
    print!("{}\n{}", report.to_csv(), report.summary());
    Ok(())
}
