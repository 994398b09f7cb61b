//! Compare scalar, Cartesian, irrep and learned-MLP messages on the vector
//! target, three seeds each. Takes a few minutes in release mode.
//!
//!     cargo run --release --example representation_study [config.json]

use locanon::experiments::{representation_study, ExperimentConfig, ToyDataset};

fn main() -> locanon::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(p) => ExperimentConfig::load(p.as_ref())?,
        None => ExperimentConfig::vector_preset(),
    };
    let ds = ToyDataset::generate(&cfg.dataset)?;
    let report = representation_study(&cfg, &ds)?;
    print!("{}\n{}", report.to_csv(), report.summary());
    Ok(())
}
