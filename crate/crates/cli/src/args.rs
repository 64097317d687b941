//! Command-line flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use rmt_noise_core::ensemble::{LawKind, Model};

#[derive(Debug, Parser)]
#[command(name = "rmt-noise", version, about = "Noise sensitivity of sparse random matrix eigenvectors")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Experiment config (TOML); its values override flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "RMT_NOISE_OUT")]
    pub out: Option<PathBuf>,
    /// Largest size handled by the dense eigensolver.
    #[arg(long, global = true)]
    pub dense_cap: Option<usize>,
    /// Continue an existing run; fails without a matching manifest.
    #[arg(long, global = true)]
    pub resume: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample one matrix and write it to a file.
    Generate(GenerateArgs),
    /// Overlap sweep over k.
    Sweep,
    /// Variance of the top eigenvalue minus the correction term.
    Variance,
    /// Top gap statistics.
    Gaps,
    /// Edge resolvent drift.
    Resolvent,
    /// Erdős–Rényi overlap sweep and eigenvalue sticking.
    Er,
    /// Overlap sweep plus scaling collapse.
    Collapse,
    /// Variance-lemma estimator.
    Chatterjee,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value = "centered-sparse")]
    pub model: Model,
    #[arg(long, value_enum, default_value = "rademacher")]
    pub law: LawArg,
    /// Matrix file to write.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum LawArg {
    Rademacher,
    Gaussian,
    UniformSymmetric,
}

impl From<LawArg> for LawKind {
    fn from(l: LawArg) -> Self {
        match l {
            LawArg::Rademacher => LawKind::Rademacher,
            LawArg::Gaussian => LawKind::Gaussian,
            LawArg::UniformSymmetric => LawKind::UniformSymmetric,
        }
    }
}
