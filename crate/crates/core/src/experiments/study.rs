//! Multi-run drivers: message-mode comparison and data-efficiency sweep.

use std::fmt::Write as _;

use crate::error::Result;
use crate::experiments::config::ExperimentConfig;
use crate::experiments::data::ToyDataset;
use crate::experiments::train::train;
use crate::mp::config::ModeKind;

pub const STUDY_HEADER: &str = "mode,seed,target,test_rmse,test_mae";
pub const SWEEP_HEADER: &str = "variant,fraction,seed,test_rmse";

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub mode: ModeKind,
    pub seed: u64,
    pub target: &'static str,
    pub test_rmse: f64,
    pub test_mae: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl StudyReport {
    /// Median test RMSE over seeds for `mode`.
    pub fn median_rmse(&self, mode: ModeKind) -> Option<f64> {
        let v: Vec<f64> = self.rows.iter().filter(|r| r.mode == mode).map(|r| r.test_rmse).collect();
        (!v.is_empty()).then(|| median(&v))
    }

    /// Cartesian and irrep medians both below scalar; `None` if a mode is missing.
    pub fn ordering_holds(&self) -> Option<bool> {
        let s = self.median_rmse(ModeKind::Scalar)?;
        let c = self.median_rmse(ModeKind::Cartesian)?;
        let i = self.median_rmse(ModeKind::Irrep)?;
        Some(c < s && i < s)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{STUDY_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{}", r.mode, r.seed, r.target, r.test_rmse, r.test_mae);
        }
        s
    }

    /// Median table and the ordering verdict.
    pub fn summary(&self) -> String {
        let mut s = String::from("mode       median_test_rmse\n");
        for mode in ModeKind::ALL {
            if let Some(m) = self.median_rmse(mode) {
                let _ = writeln!(s, "{:<10} {m:.6}", mode.name());
            }
        }
        match self.ordering_holds() {
            Some(true) => s.push_str("ordering cartesian < scalar and irrep < scalar: holds\n"),
            Some(false) => s.push_str("ordering cartesian < scalar and irrep < scalar: VIOLATED\n"),
            None => {}
        }
        s
    }
}

/// Trains every mode in `base.modes` for every seed in `base.seeds`, all
/// other settings identical.
pub fn representation_study(base: &ExperimentConfig, dataset: &ToyDataset) -> Result<StudyReport> {
    base.validate()?;
    let mut rows = Vec::new();
    for &mode in &base.modes {
        for &seed in &base.seeds {
            let mut cfg = base.clone();
            cfg.model.mode = mode;
            cfg.seed = seed;
            let r = train(&cfg, dataset)?;
            log::info!("{mode} seed {seed}: test rmse {:.6}", r.test_rmse);
            rows.push(StudyRow {
                mode,
                seed,
                target: cfg.model.target.name(),
                test_rmse: r.test_rmse,
                test_mae: r.test_mae,
            });
        }
    }
    Ok(StudyReport { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Predicted frames.
    Equivariant,
    /// Random global rotations and one shared random frame per molecule.
    Augmented,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Equivariant, Variant::Augmented];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Equivariant => "equivariant",
            Variant::Augmented => "augmented",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variant: Variant,
    pub fraction: f64,
    pub seed: u64,
    pub test_rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

impl SweepReport {
    fn seeds(&self) -> Vec<u64> {
        let mut s: Vec<u64> = self.rows.iter().map(|r| r.seed).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Per-seed log-log slopes of test RMSE against training fraction.
    pub fn slopes(&self, variant: Variant) -> Vec<f64> {
        self.seeds()
            .into_iter()
            .filter_map(|seed| {
                let (x, y): (Vec<f64>, Vec<f64>) = self
                    .rows
                    .iter()
                    .filter(|r| r.variant == variant && r.seed == seed)
                    .map(|r| (r.fraction, r.test_rmse))
                    .unzip();
                log_log_slope(&x, &y)
            })
            .collect()
    }

    pub fn median_slope(&self, variant: Variant) -> Option<f64> {
        let s = self.slopes(variant);
        (!s.is_empty()).then(|| median(&s))
    }

    /// Median test RMSE over seeds at `fraction`.
    pub fn median_rmse(&self, variant: Variant, fraction: f64) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.variant == variant && r.fraction == fraction)
            .map(|r| r.test_rmse)
            .collect();
        (!v.is_empty()).then(|| median(&v))
    }

    /// Equivariant slope at most the augmented one.
    pub fn equivariant_steeper(&self) -> Option<bool> {
        Some(self.median_slope(Variant::Equivariant)? <= self.median_slope(Variant::Augmented)?)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{SWEEP_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.variant.name(), r.fraction, r.seed, r.test_rmse);
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for v in Variant::ALL {
            match self.median_slope(v) {
                Some(m) => {
                    let _ = writeln!(s, "{:<12} median log-log slope {m:.4}", v.name());
                }
                None => {
                    let _ = writeln!(s, "{:<12} single fraction, no slope", v.name());
                }
            }
        }
        match self.equivariant_steeper() {
            Some(true) => s.push_str("equivariant slope <= augmented slope: holds\n"),
            Some(false) => s.push_str("equivariant slope <= augmented slope: VIOLATED\n"),
            None => {}
        }
        s
    }
}

/// Trains the equivariant and augmented variants of `cfg` at each training
/// fraction for every seed in `cfg.seeds`.
pub fn data_efficiency_sweep(cfg: &ExperimentConfig, dataset: &ToyDataset, fractions: &[f64]) -> Result<SweepReport> {
    let mut base = cfg.clone();
    base.fractions = fractions.to_vec();
    base.validate()?;
    let mut rows = Vec::new();
    for variant in Variant::ALL {
        for &seed in &base.seeds {
            for &fraction in fractions {
                let mut c = base.clone();
                c.seed = seed;
                c.train_fraction = fraction;
                c.augmentation = variant == Variant::Augmented;
                let r = train(&c, dataset)?;
                log::info!("{} fraction {fraction} seed {seed}: test rmse {:.6}", variant.name(), r.test_rmse);
                rows.push(SweepRow {
                    variant,
                    fraction,
                    seed,
                    test_rmse: r.test_rmse,
                });
            }
        }
    }
    Ok(SweepReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::data::DatasetConfig;

    fn tiny() -> (ExperimentConfig, ToyDataset) {
        let mut cfg = ExperimentConfig {
            epochs: 1,
            batch_size: 16,
            seeds: vec![0],
            ..ExperimentConfig::default()
        };
        cfg.model.num_layers = 1;
        cfg.model.hidden_rep = "2x0n+1x1n+1x2n".into();
        cfg.model.target = crate::mp::config::TargetKind::Vector;
        let ds = ToyDataset::generate(&DatasetConfig {
            n_molecules: 30,
            nodes_min: 3,
            nodes_max: 5,
            ..DatasetConfig::default()
        })
        .unwrap();
        (cfg, ds)
    }

    #[test]
    fn slope_of_power_law() {
        let x = [0.1, 0.3, 1.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 2.0 * v.powf(-0.5)).collect();
        assert!((log_log_slope(&x, &y).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(log_log_slope(&[1.0], &[1.0]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0]), 2.5);
    }

    #[test]
    fn study_emits_one_row_per_mode() {
        let (cfg, ds) = tiny();
        let r = representation_study(&cfg, &ds).unwrap();
        assert_eq!(r.rows.len(), 4);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("mode,seed,target,test_rmse,test_mae\nscalar,0,vector,"));
        assert!(r.ordering_holds().is_some());
    }

    #[test]
    fn single_fraction_sweep_is_degenerate() {
        let (cfg, ds) = tiny();
        let r = data_efficiency_sweep(&cfg, &ds, &[1.0]).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.equivariant_steeper(), None);
        assert!(r.to_csv().starts_with("variant,fraction,seed,test_rmse\nequivariant,1,0,"));
    }
}
