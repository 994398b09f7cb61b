//! Generate synthetic molecules and train one model on the dipole-like
//! vector target.
//!
//!     cargo run --release --example train_toy [mode] [epochs]

use locanon::experiments::{train, ExperimentConfig, ToyDataset};
use locanon::mp::ModeKind;

fn main() -> locanon::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = ExperimentConfig::vector_preset();
    cfg.dataset.n_molecules = 600;
    cfg.epochs = 10;
    if let Some(m) = args.next() {
        cfg.model.mode = m.parse::<ModeKind>()?;
    }
    if let Some(e) = args.next() {
        cfg.epochs = e.parse().map_err(|_| locanon::Error::CheckFailed("epochs must be an integer".into()))?;
    }
    let ds = ToyDataset::generate(&cfg.dataset)?;
    println!(
        "{} molecules, first has {} nodes and dipole {:.3?}",
        ds.len(),
        ds.molecules[0].len(),
        ds.molecules[0].targets.vector
    );
    let report = train(&cfg, &ds)?;
    for (e, (t, v)) in report.train_loss.iter().zip(&report.val_loss).enumerate() {
        println!("epoch {:>2}  train {t:.5}  val {v:.5}", e + 1);
    }
    println!(
        "{} mode: test rmse {:.4} (target rms {:.4})",
        cfg.model.mode, report.test_rmse, report.target_scale
    );
    Ok(())
}
