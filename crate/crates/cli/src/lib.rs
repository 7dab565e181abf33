//! Batch pipelines over the core library: circuit generation, descriptor
//! tables, kernel evaluation, descriptor-guided search and report emission.
//! Every command is a deterministic function of its inputs, flags and seed,
//! and writes a manifest sidecar sufficient to re-execute it.

pub mod commands;
pub mod manifest;
pub mod records;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "qcmol",
    version,
    about = "Molecular descriptors for quantum-kernel circuit search"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample random circuits, or extend existing ones to a deeper target.
    Generate(GenerateArgs),
    /// Map circuits to molecules and emit descriptor rows (Gershgorin radii
    /// and PCA-reduced fingerprint scores).
    Describe(DescribeArgs),
    /// Optimize each circuit's parameters, train kernel SVMs and score them.
    Evaluate(EvaluateArgs),
    /// Select circuits by descriptor quadrant or rank, with an enrichment
    /// report against evaluation labels.
    Search(SearchArgs),
    /// Emit plot-ready PCA scatter and per-class KDE tables.
    Report(ReportArgs),
    /// Re-execute the command recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Args, Debug, Clone)]
pub struct PolicyArgs {
    /// Probability of leaving a slot empty.
    #[arg(long, default_value_t = 0.2)]
    pub p_identity: f64,
    /// Probability of drawing an Rz gate.
    #[arg(long, default_value_t = 0.5)]
    pub p_rz: f64,
    /// Probability of drawing a CNOT control.
    #[arg(long, default_value_t = 0.3)]
    pub p_cnot: f64,
    /// Cap on the CNOT offset (default: qubits - 1).
    #[arg(long)]
    pub delta_max: Option<usize>,
}

impl PolicyArgs {
    pub fn to_policy(&self) -> qcmol::circuit::GatePolicy {
        qcmol::circuit::GatePolicy {
            p_identity: self.p_identity,
            p_rz: self.p_rz,
            p_cnot: self.p_cnot,
            delta_max: self.delta_max,
        }
    }
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Register size; required unless --extend-from supplies circuits.
    #[arg(long)]
    pub qubits: Option<usize>,
    /// Layer count of the emitted circuits (total, including any prefix).
    #[arg(long)]
    pub layers: usize,
    /// Number of circuits to sample (ignored with --extend-from).
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Extend every circuit of this file to --layers layers, preserving the
    /// original layers bit-exactly.
    #[arg(long)]
    pub extend_from: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DescribeArgs {
    #[arg(long)]
    pub circuits: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Angstroms per layout unit in the Coulomb matrix.
    #[arg(long, default_value_t = 1.5)]
    pub bond_scale: f64,
    #[arg(long, default_value_t = 2048)]
    pub fp_width: usize,
    #[arg(long, default_value_t = 7)]
    pub fp_max_path: usize,
    /// Also write the mapped molecules, one `<id> <record>` line each.
    #[arg(long)]
    pub molecules_out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginModeArg {
    Absolute,
    Relative,
}

impl MarginModeArg {
    pub fn to_mode(self) -> qcmol::svm::MarginMode {
        match self {
            MarginModeArg::Absolute => qcmol::svm::MarginMode::Absolute,
            MarginModeArg::Relative => qcmol::svm::MarginMode::RelativeToRange,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MarginModeArg::Absolute => "absolute",
            MarginModeArg::Relative => "relative",
        }
    }
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub circuits: PathBuf,
    /// Dataset spec: `hidden-manifold:d=4`,
    /// `csv:path=F;features=a,b,c;label=k;positive=tok`, or
    /// `mnist:images=F;labels=F;a=3;b=5;dim=5`.
    #[arg(long)]
    pub dataset: String,
    #[arg(long, default_value_t = 1000)]
    pub train_size: usize,
    #[arg(long, default_value_t = 1000)]
    pub test_size: usize,
    #[arg(long, default_value_t = 20)]
    pub bo_budget: usize,
    #[arg(long, default_value_t = 5)]
    pub bo_init: usize,
    #[arg(long, default_value_t = 512)]
    pub bo_pool: usize,
    #[arg(long, default_value_t = 1.0)]
    pub svm_c: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub svm_tol: f64,
    /// Encoding bandwidth: scaled features span [0, feature-scale] radians.
    /// Small values leave the bare feature map smooth so that accumulated
    /// rotations sharpen the kernel; pi reproduces the raw scaler output.
    #[arg(long, default_value_t = 0.1)]
    pub feature_scale: f64,
    /// Labeling margin around the accuracy midpoint.
    #[arg(long, default_value_t = 0.10)]
    pub margin: f64,
    #[arg(long, value_enum, default_value_t = MarginModeArg::Absolute)]
    pub margin_mode: MarginModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadrantArg {
    /// r_min and r_max both above their thresholds.
    High,
    /// r_min and r_max both at or below their thresholds.
    Low,
}

impl QuadrantArg {
    pub fn as_str(self) -> &'static str {
        match self {
            QuadrantArg::High => "high",
            QuadrantArg::Low => "low",
        }
    }
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    /// Descriptor table from `describe` (filter and top-rmin modes).
    #[arg(long)]
    pub described: Option<PathBuf>,
    /// Evaluation table from `evaluate`; enables the enrichment report.
    #[arg(long)]
    pub evaluated: Option<PathBuf>,
    /// Select this descriptor quadrant.
    #[arg(long, value_enum)]
    pub quadrant: Option<QuadrantArg>,
    /// Select the N circuits with the largest r_min instead of a quadrant.
    #[arg(long)]
    pub top_rmin: Option<usize>,
    /// Subsample the matching set to this many circuits (or, with --fresh,
    /// keep sampling until this many land in the quadrant).
    #[arg(long)]
    pub sample: Option<usize>,
    /// Quadrant thresholds; default to the batch medians.
    #[arg(long)]
    pub r_min_threshold: Option<f64>,
    #[arg(long)]
    pub r_max_threshold: Option<f64>,
    /// Sample fresh circuits rejection-style instead of filtering a table.
    #[arg(long, default_value_t = false)]
    pub fresh: bool,
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub layers: usize,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Attempt cap for --fresh rejection sampling.
    #[arg(long, default_value_t = 100_000)]
    pub reject_cap: usize,
    #[arg(long, default_value_t = 1.5)]
    pub bond_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Circuit file the ids refer to; selected lines go to --circuits-out.
    #[arg(long)]
    pub circuits: Option<PathBuf>,
    #[arg(long)]
    pub circuits_out: Option<PathBuf>,
    /// Plain-text enrichment summary.
    #[arg(long)]
    pub report_out: Option<PathBuf>,
    /// Selected subset table (id, r_min, r_max, label).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdeOverArg {
    RMin,
    RMax,
}

impl KdeOverArg {
    pub fn as_str(self) -> &'static str {
        match self {
            KdeOverArg::RMin => "r_min",
            KdeOverArg::RMax => "r_max",
        }
    }
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(long)]
    pub evaluated: PathBuf,
    #[arg(long)]
    pub described: PathBuf,
    /// Output prefix: writes `<prefix>_pca.csv` and `<prefix>_kde.csv`.
    #[arg(long)]
    pub out_prefix: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 256)]
    pub grid_points: usize,
    #[arg(long, default_value_t = 200)]
    pub n_boot: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Descriptor the class densities are computed over.
    #[arg(long, value_enum, default_value_t = KdeOverArg::RMin)]
    pub kde_over: KdeOverArg,
}

#[derive(Args, Debug)]
pub struct RerunArgs {
    /// Manifest whose recorded command is re-executed verbatim.
    #[arg(long)]
    pub manifest: PathBuf,
}

/// Whether a command completed cleanly or flagged part of its batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    /// Some rows were flagged or skipped; outputs were still written.
    Partial,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Clean => 0,
            Outcome::Partial => 2,
        }
    }
}

/// Parse and execute an argument vector (without the binary name).
pub fn run_args(argv: &[String]) -> Result<Outcome> {
    let mut full = vec!["qcmol".to_string()];
    full.extend_from_slice(argv);
    let cli = match Cli::try_parse_from(&full) {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return Ok(Outcome::Clean);
        }
        Err(e) => {
            let rendered = e.to_string();
            let trimmed = rendered.strip_prefix("error: ").unwrap_or(&rendered);
            anyhow::bail!("{}", trimmed.trim_end());
        }
    };
    match cli.command {
        Command::Generate(args) => commands::generate::run(&args, argv),
        Command::Describe(args) => commands::describe::run(&args, argv),
        Command::Evaluate(args) => commands::evaluate::run(&args, argv),
        Command::Search(args) => commands::search::run(&args, argv),
        Command::Report(args) => commands::report::run(&args, argv),
        Command::Rerun(args) => {
            let manifest = manifest::Manifest::read(&args.manifest)?;
            if manifest.command == "rerun" {
                anyhow::bail!("refusing to rerun a rerun manifest");
            }
            run_args(&manifest.argv)
                .with_context(|| format!("re-executing manifest {}", args.manifest.display()))
        }
    }
}
