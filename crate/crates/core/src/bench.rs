//! Transform micro-benchmarks: Wigner-D construction, irrep action with a
//! cached Wigner stack, and the Cartesian tensor action.
//!
//! Every kernel owns its buffers, so the timed loop in [`measure`] does not
//! allocate once constructed.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::experiments::study::{log_log_slope, median};
use crate::group::{random_rotation, GroupElement};
use crate::reps::action::RepAction;
use crate::reps::spec::{Parity, RepBlock, RepKind, RepSpec, MAX_CARTESIAN_ORDER, MAX_IRREP_DEGREE};
use crate::reps::wigner::WignerStack;

pub const BENCH_HEADER: &str = "kind,degree,multiplicity,batch,median_seconds,reps,components,ops_estimate";
pub const MIN_REPS: usize = 30;
pub const WARMUP: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchKind {
    Wigner,
    Irrep,
    Cartesian,
}

impl BenchKind {
    pub fn name(self) -> &'static str {
        match self {
            BenchKind::Wigner => "wigner",
            BenchKind::Irrep => "irrep",
            BenchKind::Cartesian => "cartesian",
        }
    }

    /// `2l+1` or `3ⁿ`.
    pub fn components(self, degree: usize) -> usize {
        match self {
            BenchKind::Wigner | BenchKind::Irrep => 2 * degree + 1,
            BenchKind::Cartesian => 3usize.pow(degree as u32),
        }
    }

    /// Multiply-adds per transform of one feature row.
    pub fn ops_estimate(self, degree: usize, multiplicity: usize) -> usize {
        match self {
            // Each entry of each level costs a handful of products.
            BenchKind::Wigner => (0..=degree).map(|k| 9 * (2 * k + 1) * (2 * k + 1)).sum(),
            BenchKind::Irrep => multiplicity * (2 * degree + 1) * (2 * degree + 1),
            BenchKind::Cartesian => multiplicity * degree * 3usize.pow(degree as u32 + 1),
        }
    }
}

/// Preallocated workload for one benchmark row.
pub struct BenchKernel {
    kind: BenchKind,
    batch: usize,
    elements: Vec<GroupElement>,
    stack: Option<WignerStack>,
    spec: Option<RepSpec>,
    action: Option<RepAction>,
    input: Vec<f64>,
    output: Vec<f64>,
    scratch: Vec<f64>,
}

impl BenchKernel {
    pub fn new(kind: BenchKind, degree: usize, multiplicity: usize, batch: usize, rng: &mut impl Rng) -> Result<Self> {
        let cap = match kind {
            BenchKind::Cartesian => MAX_CARTESIAN_ORDER,
            _ => MAX_IRREP_DEGREE,
        };
        if degree > cap {
            return Err(Error::UnsupportedDegree { degree, cap });
        }
        if batch == 0 || multiplicity == 0 {
            return Err(Error::config("batch", "batch and multiplicity must be positive"));
        }
        let elements: Vec<GroupElement> = (0..batch).map(|_| random_rotation(rng)).collect();
        let mut k = Self {
            kind,
            batch,
            elements,
            stack: None,
            spec: None,
            action: None,
            input: Vec::new(),
            output: Vec::new(),
            scratch: Vec::new(),
        };
        match kind {
            BenchKind::Wigner => k.stack = Some(WignerStack::new(degree)?),
            BenchKind::Irrep | BenchKind::Cartesian => {
                let rk = if kind == BenchKind::Irrep { RepKind::Irrep } else { RepKind::Cartesian };
                let spec = RepSpec::new(
                    rk,
                    vec![RepBlock {
                        multiplicity,
                        degree,
                        parity: Parity::Normal,
                        kind: rk,
                    }],
                )?;
                let dim = spec.total_dim();
                k.action = Some(RepAction::new(&spec, &k.elements[0])?);
                k.input = (0..dim * batch).map(|_| rng.gen_range(-1.0..1.0)).collect();
                k.output = vec![0.0; dim * batch];
                k.scratch = vec![0.0; RepAction::scratch_len(&spec)];
                k.spec = Some(spec);
            }
        }
        Ok(k)
    }

    /// One pass over the batch.
    pub fn run(&mut self) {
        match self.kind {
            BenchKind::Wigner => {
                let stack = self.stack.as_mut().expect("wigner kernel");
                for g in &self.elements {
                    stack.compute(g);
                }
            }
            _ => {
                let spec = self.spec.as_ref().expect("rep kernel");
                let action = self.action.as_ref().expect("rep kernel");
                let dim = spec.total_dim();
                for (x, y) in self.input.chunks(dim).zip(self.output.chunks_mut(dim)) {
                    action.apply_into(spec, x, y, &mut self.scratch);
                }
            }
        }
    }

    /// Checksum so the optimizer cannot discard the work.
    pub fn checksum(&self) -> f64 {
        match &self.stack {
            Some(s) => s.block(s.lmax()).iter().sum(),
            None => self.output.iter().sum(),
        }
    }
}

/// Runs `warmup` untimed passes, then appends `reps` per-transform times to
/// `samples`. Does not allocate when `samples` has spare capacity.
pub fn measure(kernel: &mut BenchKernel, warmup: usize, reps: usize, samples: &mut Vec<f64>) {
    for _ in 0..warmup {
        kernel.run();
    }
    for _ in 0..reps {
        let t = Instant::now();
        kernel.run();
        samples.push(t.elapsed().as_secs_f64() / kernel.batch as f64);
    }
    std::hint::black_box(kernel.checksum());
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub irrep_degrees: Vec<usize>,
    pub cartesian_orders: Vec<usize>,
    pub multiplicities: Vec<usize>,
    pub batch: usize,
    pub reps: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            irrep_degrees: (0..=MAX_IRREP_DEGREE).collect(),
            cartesian_orders: (0..=MAX_CARTESIAN_ORDER).collect(),
            multiplicities: vec![1],
            batch: 256,
            reps: MIN_REPS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub kind: BenchKind,
    pub degree: usize,
    pub multiplicity: usize,
    pub batch: usize,
    pub median_seconds: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

/// Times every configured row; `reps` is raised to [`MIN_REPS`].
pub fn bench_transforms(cfg: &BenchConfig) -> Result<BenchReport> {
    let reps = cfg.reps.max(MIN_REPS);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    let mut samples = Vec::with_capacity(reps);
    let mut plan = Vec::new();
    for &l in &cfg.irrep_degrees {
        plan.push((BenchKind::Wigner, l, 1));
    }
    for &m in &cfg.multiplicities {
        for &l in &cfg.irrep_degrees {
            plan.push((BenchKind::Irrep, l, m));
        }
        for &n in &cfg.cartesian_orders {
            plan.push((BenchKind::Cartesian, n, m));
        }
    }
    for (kind, degree, multiplicity) in plan {
        let mut kernel = BenchKernel::new(kind, degree, multiplicity, cfg.batch, &mut rng)?;
        samples.clear();
        measure(&mut kernel, WARMUP, reps, &mut samples);
        rows.push(BenchRow {
            kind,
            degree,
            multiplicity,
            batch: cfg.batch,
            median_seconds: median(&samples),
            reps,
        });
    }
    Ok(BenchReport { rows })
}

impl BenchReport {
    fn times(&self, kind: BenchKind) -> Vec<(usize, f64)> {
        let m = self.rows.iter().filter(|r| r.kind == kind).map(|r| r.multiplicity).min();
        self.rows
            .iter()
            .filter(|r| r.kind == kind && Some(r.multiplicity) == m)
            .map(|r| (r.degree, r.median_seconds))
            .collect()
    }

    /// Log-log slope of Wigner construction time over `l ∈ [lo, hi]`.
    pub fn wigner_exponent(&self, lo: usize, hi: usize) -> Option<f64> {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .times(BenchKind::Wigner)
            .into_iter()
            .filter(|&(l, t)| l >= lo && l <= hi && t > 0.0)
            .map(|(l, t)| (l as f64, t))
            .unzip();
        log_log_slope(&x, &y)
    }

    /// `(n, time(n+1)/time(n))` for consecutive Cartesian orders `n ≥ 1`.
    pub fn cartesian_ratios(&self) -> Vec<(usize, f64)> {
        let t = self.times(BenchKind::Cartesian);
        let time = |n: usize| t.iter().find(|p| p.0 == n).map(|p| p.1);
        t.iter()
            .filter(|p| p.0 >= 1)
            .filter_map(|&(n, tn)| time(n + 1).map(|t1| (n, t1 / tn)))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{BENCH_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{:e},{},{},{}",
                r.kind.name(),
                r.degree,
                r.multiplicity,
                r.batch,
                r.median_seconds,
                r.reps,
                r.kind.components(r.degree),
                r.kind.ops_estimate(r.degree, r.multiplicity)
            );
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        if let Some(e) = self.wigner_exponent(4, 16) {
            let _ = writeln!(s, "wigner construction exponent over l=4..16: {e:.3}");
        }
        for (n, r) in self.cartesian_ratios() {
            let _ = writeln!(s, "cartesian time({})/time({n}) = {r:.3}", n + 1);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_counts() {
        assert_eq!(BenchKind::Irrep.components(7), 15);
        assert_eq!(BenchKind::Cartesian.components(4), 81);
        assert_eq!(BenchKind::Cartesian.ops_estimate(0, 3), 0);
    }

    #[test]
    fn caps_are_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(BenchKernel::new(BenchKind::Cartesian, 5, 1, 4, &mut rng).is_err());
        assert!(BenchKernel::new(BenchKind::Wigner, 17, 1, 4, &mut rng).is_err());
    }

    #[test]
    fn small_report() {
        let cfg = BenchConfig {
            irrep_degrees: vec![0, 1, 2],
            cartesian_orders: vec![0, 1, 2],
            batch: 4,
            reps: 1,
            ..BenchConfig::default()
        };
        let r = bench_transforms(&cfg).unwrap();
        assert_eq!(r.rows.len(), 9);
        assert!(r.rows.iter().all(|row| row.reps == MIN_REPS));
        let csv = r.to_csv();
        assert!(csv.starts_with(BENCH_HEADER));
        assert!(csv.contains("\ncartesian,2,1,4,"));
        assert_eq!(r.cartesian_ratios().len(), 1);
    }
}
