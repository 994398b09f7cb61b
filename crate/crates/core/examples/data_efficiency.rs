//! Error against training-set size for predicted-frame training and for
//! rotation augmentation with one shared random frame per molecule.
//!
//!     cargo run --release --example data_efficiency [config.json]

use locanon::experiments::{data_efficiency_sweep, ExperimentConfig, ToyDataset, Variant};

fn main() -> locanon::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(p) => ExperimentConfig::load(p.as_ref())?,
        None => ExperimentConfig::vector_preset(),
    };
    let ds = ToyDataset::generate(&cfg.dataset)?;
    let report = data_efficiency_sweep(&cfg, &ds, &cfg.fractions)?;
    print!("{}", report.to_csv());
    for v in Variant::ALL {
        let medians: Vec<String> = cfg
            .fractions
            .iter()
            .filter_map(|&f| report.median_rmse(v, f).map(|r| format!("{f}: {r:.4}")))
            .collect();
        println!("{:<12} {}", v.name(), medians.join("  "));
    }
    print!("{}", report.summary());
    Ok(())
}
