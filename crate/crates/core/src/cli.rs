//! Command-line front end. Human-readable text goes to stdout; `--out` writes
//! the machine-readable CSV or JSON.
//!
//! Exit codes: 0 success, 1 invalid input or usage, 2 a numerical check failed.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::bench::{bench_transforms, BenchConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    data_efficiency_sweep, frame_equivariance, model_equivariance, representation_study, train, DatasetConfig,
    ExperimentConfig, ToyDataset,
};
use crate::group::random_rotation;
use crate::mp::config::TargetKind;
use crate::mp::model::build_model;
use crate::nn::params::ParamStore;
use crate::reps::decompose::RESIDUAL_TOL;
use crate::reps::{check_reps, decompose_cartesian, parse_repspec, RepKind, CHECK_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_CHECK: i32 = 2;

/// Model outputs must transform within this bound.
pub const EQUIVARIANCE_TOL: f64 = 1e-10;
pub const FRAME_TOL: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(name = "locanon", version, about = "Local-frame O(3) message passing toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Representation utilities.
    #[command(subcommand)]
    Reps(RepsCommand),
    /// Frame utilities.
    #[command(subcommand)]
    Frames(FramesCommand),
    /// End-to-end invariance/equivariance report for an experiment config.
    Equivariance {
        config: PathBuf,
        /// Also check a trained parameter file for the config's model.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        molecules: usize,
        #[arg(long, default_value_t = 20)]
        transforms: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Out,
    },
    /// Micro-benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Writes a synthetic dataset as JSON lines.
    GenData {
        #[arg(long = "n", default_value_t = 400)]
        n_molecules: usize,
        #[arg(long, default_value_t = 5)]
        nodes_min: usize,
        #[arg(long, default_value_t = 9)]
        nodes_max: usize,
        #[arg(long, default_value_t = 3.0)]
        box_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Out,
    },
    /// Trains one model; `--out` is a directory for metrics.csv and checkpoint.json.
    Train {
        config: PathBuf,
        #[command(flatten)]
        out: Out,
    },
    /// Compares message modes over seeds.
    Study {
        config: PathBuf,
        #[command(flatten)]
        out: Out,
    },
    /// Equivariant vs augmented training over training-set fractions.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Subcommand, Debug)]
pub enum RepsCommand {
    /// Parses a spec such as `8x0p+4x1n` under both kinds.
    Parse {
        spec: String,
        #[command(flatten)]
        out: Out,
    },
    /// Homomorphism and orthogonality suite.
    Check {
        #[arg(long, default_value_t = 8)]
        l: usize,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        pairs: usize,
        #[arg(long, default_value_t = CHECK_TOL)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Out,
    },
    /// Irrep content of a Cartesian tensor and its block-diagonalization residual.
    Decompose {
        #[arg(long)]
        order: usize,
        #[arg(long, default_value_t = 100)]
        rotations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Subcommand, Debug)]
pub enum FramesCommand {
    /// Frame equivariance over a JSON-lines dataset.
    Check {
        dataset: PathBuf,
        #[arg(long, default_value_t = 20)]
        transforms: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Subcommand, Debug)]
pub enum BenchCommand {
    /// Wigner construction and irrep/Cartesian transform timings.
    Reps {
        #[arg(long, default_value_t = 16)]
        lmax: usize,
        #[arg(long, default_value_t = 4)]
        nmax: usize,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        multiplicities: Vec<usize>,
        #[arg(long, default_value_t = 256)]
        batch: usize,
        #[arg(long, default_value_t = 30)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Out {
    /// Machine-readable output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Out {
    fn write(&self, contents: &str) -> Result<()> {
        if let Some(p) = &self.out {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, contents)?;
        }
        Ok(())
    }
}

/// What a command printed and whether its checks held.
struct Outcome {
    text: String,
    passed: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, passed: true }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                eprint!("\n{}", grammar());
                return EXIT_INVALID;
            }
            return EXIT_OK;
        }
    };
    match execute(cli.command) {
        Ok(o) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(o.text.as_bytes());
            if o.passed {
                EXIT_OK
            } else {
                let _ = writeln!(stdout, "check FAILED");
                EXIT_CHECK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// One usage line per leaf subcommand.
pub fn grammar() -> String {
    fn walk(c: &clap::Command, out: &mut String) {
        let leaves: Vec<_> = c.get_subcommands().filter(|s| s.get_name() != "help").collect();
        if leaves.is_empty() {
            let usage = c.clone().render_usage().to_string();
            let _ = writeln!(out, "  {}", usage.trim_start_matches("Usage: "));
        }
        for s in leaves {
            walk(s, out);
        }
    }
    let mut cmd = <Cli as clap::CommandFactory>::command();
    cmd.build();
    let mut out = String::from("Commands:\n");
    walk(&cmd, &mut out);
    out
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::DecompositionFailed { .. } | Error::CheckFailed(_) | Error::NanLoss { .. } => EXIT_CHECK,
        _ => EXIT_INVALID,
    }
}

fn load_dataset(cfg: &ExperimentConfig) -> Result<ToyDataset> {
    match &cfg.dataset_path {
        Some(p) => ToyDataset::read_jsonl(p),
        None => ToyDataset::generate(&cfg.dataset),
    }
}

fn execute(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Reps(RepsCommand::Parse { spec, out }) => reps_parse(&spec, &out),
        Command::Reps(RepsCommand::Check {
            l,
            n,
            pairs,
            tol,
            seed,
            out,
        }) => reps_check(l, n, pairs, tol, seed, &out),
        Command::Reps(RepsCommand::Decompose {
            order,
            rotations,
            seed,
            out,
        }) => reps_decompose(order, rotations, seed, &out),
        Command::Frames(FramesCommand::Check {
            dataset,
            transforms,
            seed,
            out,
        }) => frames_check(&dataset, transforms, seed, &out),
        Command::Equivariance {
            config,
            checkpoint,
            molecules,
            transforms,
            seed,
            out,
        } => equivariance(&config, checkpoint.as_deref(), molecules, transforms, seed, &out),
        Command::Bench(BenchCommand::Reps {
            lmax,
            nmax,
            multiplicities,
            batch,
            reps,
            seed,
            out,
        }) => {
            let cfg = BenchConfig {
                irrep_degrees: (0..=lmax).collect(),
                cartesian_orders: (0..=nmax).collect(),
                multiplicities,
                batch,
                reps,
                seed,
            };
            let report = bench_transforms(&cfg)?;
            let csv = report.to_csv();
            out.write(&csv)?;
            Ok(Outcome::ok(format!("{csv}{}", report.summary())))
        }
        Command::GenData {
            n_molecules,
            nodes_min,
            nodes_max,
            box_scale,
            seed,
            out,
        } => {
            let cfg = DatasetConfig {
                n_molecules,
                nodes_min,
                nodes_max,
                box_scale,
                seed,
            };
            cfg.validate()?;
            let ds = ToyDataset::generate(&cfg)?;
            if let Some(p) = &out.out {
                ds.write_jsonl(p)?;
            }
            let nodes: usize = ds.molecules.iter().map(|m| m.len()).sum();
            Ok(Outcome::ok(format!(
                "{} molecules, {nodes} nodes, split {}/{}/{}\n",
                ds.len(),
                ds.split.train.len(),
                ds.split.val.len(),
                ds.split.test.len()
            )))
        }
        Command::Train { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let ds = load_dataset(&cfg)?;
            let report = train(&cfg, &ds)?;
            if let Some(dir) = &out.out {
                report.write(dir)?;
            }
            let mut text = String::new();
            for (e, l) in report.train_loss.iter().enumerate() {
                let _ = write!(text, "epoch {:>3} train loss {l:.6}", e + 1);
                if let Some(v) = report.val_loss.get(e) {
                    let _ = write!(text, "  val loss {v:.6}");
                }
                text.push('\n');
            }
            let _ = writeln!(
                text,
                "test {}: rmse {:.6} mae {:.6}",
                cfg.model.target, report.test_rmse, report.test_mae
            );
            Ok(Outcome::ok(text))
        }
        Command::Study { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let ds = load_dataset(&cfg)?;
            let report = representation_study(&cfg, &ds)?;
            out.write(&report.to_csv())?;
            Ok(Outcome::ok(format!("{}{}", report.to_csv(), report.summary())))
        }
        Command::Sweep { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let ds = load_dataset(&cfg)?;
            let report = data_efficiency_sweep(&cfg, &ds, &cfg.fractions)?;
            out.write(&report.to_csv())?;
            Ok(Outcome::ok(format!("{}{}", report.to_csv(), report.summary())))
        }
    }
}

fn reps_parse(text: &str, out: &Out) -> Result<Outcome> {
    let mut s = String::new();
    let mut kinds = Vec::new();
    for kind in [RepKind::Cartesian, RepKind::Irrep] {
        let spec = parse_repspec(text, kind)?;
        let _ = writeln!(s, "{}: {spec}", kind.name());
        let mut dims = Vec::new();
        for b in spec.blocks() {
            let _ = writeln!(
                s,
                "  {} x degree {} parity {} -> {} components each",
                b.multiplicity,
                b.degree,
                b.parity.letter(),
                b.components()
            );
            dims.push(b.dim().to_string());
        }
        let _ = writeln!(s, "  total_dim {} = {}", dims.join("+"), spec.total_dim());
        kinds.push(json!({
            "kind": kind.name(),
            "spec": spec.to_string(),
            "blocks": spec.blocks().iter().map(|b| json!({
                "multiplicity": b.multiplicity,
                "degree": b.degree,
                "parity": b.parity.letter().to_string(),
            })).collect::<Vec<_>>(),
            "total_dim": spec.total_dim(),
        }));
    }
    out.write(&serde_json::to_string_pretty(&json!({ "input": text, "kinds": kinds }))?)?;
    Ok(Outcome::ok(s))
}

fn reps_check(l: usize, n: usize, pairs: usize, tol: f64, seed: u64, out: &Out) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = check_reps(l, n, pairs, &mut rng)?;
    let mut csv = String::from("kind,degree,parity,homomorphism,orthogonality,passed\n");
    let mut text = String::new();
    let mut passed = true;
    for r in &rows {
        let ok = r.passed(tol);
        passed &= ok;
        let _ = writeln!(
            csv,
            "{},{},{},{:e},{:e},{ok}",
            r.kind.name(),
            r.degree,
            r.parity.letter(),
            r.homomorphism,
            r.orthogonality
        );
        let _ = writeln!(
            text,
            "{:<9} degree {:>2} {}  homomorphism {:.2e}  orthogonality {:.2e}  {}",
            r.kind.name(),
            r.degree,
            r.parity.letter(),
            r.homomorphism,
            r.orthogonality,
            if ok { "ok" } else { "FAIL" }
        );
    }
    let _ = writeln!(text, "{} reps, {pairs} pairs each, tolerance {tol:e}", rows.len());
    out.write(&csv)?;
    Ok(Outcome { text, passed })
}

fn reps_decompose(order: usize, rotations: usize, seed: u64, out: &Out) -> Result<Outcome> {
    let q = decompose_cartesian(order)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let residual = (0..rotations)
        .map(|_| q.residual_for(&random_rotation(&mut rng)))
        .fold(0.0f64, f64::max);
    let multiset = q.multiset();
    let dims: Vec<String> = multiset
        .iter()
        .map(|&(l, m)| format!("{}", m * (2 * l + 1)))
        .collect();
    let passed = residual < RESIDUAL_TOL;
    let text = format!(
        "order {order}: {}, residual {} {RESIDUAL_TOL:e} (max {residual:.2e} over {rotations} rotations)\ndims {} = {}\n",
        q.multiset_string(),
        if passed { "<" } else { ">=" },
        dims.join("+"),
        3usize.pow(order as u32)
    );
    let value = json!({
        "order": order,
        "irreps": multiset.iter().map(|&(l, m)| json!({"degree": l, "multiplicity": m})).collect::<Vec<_>>(),
        "residual": residual,
        "rotations": rotations,
    });
    out.write(&serde_json::to_string_pretty(&value)?)?;
    Ok(Outcome { text, passed })
}

fn frames_check(dataset: &Path, transforms: usize, seed: u64, out: &Out) -> Result<Outcome> {
    let ds = ToyDataset::read_jsonl(dataset)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = frame_equivariance(&ds.molecules, transforms, &mut rng)?;
    let passed = r.max_error < FRAME_TOL;
    let text = format!(
        "{} molecules x {} transforms: max |F(QX+t) - F(X)Q^T| = {:.2e} (tol {FRAME_TOL:e}), {} of {} nodes degenerate\n",
        r.molecules, r.transforms, r.max_error, r.degenerate_nodes, r.nodes
    );
    out.write(&serde_json::to_string_pretty(&json!({
        "molecules": r.molecules,
        "transforms": r.transforms,
        "max_error": r.max_error,
        "degenerate_nodes": r.degenerate_nodes,
        "nodes": r.nodes,
        "passed": passed,
    }))?)?;
    Ok(Outcome { text, passed })
}

fn equivariance(
    config: &Path,
    checkpoint: Option<&Path>,
    molecules: usize,
    transforms: usize,
    seed: u64,
    out: &Out,
) -> Result<Outcome> {
    let cfg = ExperimentConfig::load(config)?;
    let ds = load_dataset(&cfg)?;
    let mols = &ds.molecules[..molecules.min(ds.len())];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("mode,target,state,max_error\n");
    let mut text = String::new();
    let mut passed = true;
    let mut record = |mode: &str, target: TargetKind, state: &str, err: f64| {
        let ok = err < EQUIVARIANCE_TOL;
        passed &= ok;
        let _ = writeln!(csv, "{mode},{target},{state},{err:e}");
        let _ = writeln!(
            text,
            "{mode:<9} {target:<6} {state:<9} max error {err:.2e} {}",
            if ok { "ok" } else { "FAIL" }
        );
    };
    for &mode in &cfg.modes {
        for target in TargetKind::ALL {
            let mut m = cfg.model.clone();
            m.mode = mode;
            m.target = target;
            let model = build_model(&m, cfg.seed)?;
            let err = model_equivariance(&model, mols, transforms, &mut rng)?;
            record(mode.name(), target, "untrained", err);
        }
    }
    if let Some(path) = checkpoint {
        let mut model = build_model(&cfg.model, cfg.seed)?;
        let params = ParamStore::load(path)?;
        if params.names() != model.params.names() {
            return Err(Error::config("checkpoint", "parameters do not match the config's model"));
        }
        model.params = params;
        let err = model_equivariance(&model, mols, transforms, &mut rng)?;
        record(cfg.model.mode.name(), cfg.model.target, "trained", err);
    }
    let _ = writeln!(text, "{} molecules x {transforms} transforms, tol {EQUIVARIANCE_TOL:e}", mols.len());
    out.write(&csv)?;
    Ok(Outcome { text, passed })
}
