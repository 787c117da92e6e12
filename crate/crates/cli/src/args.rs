use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "decolab",
    version,
    about = "Decoherence laboratory: spectral states, weak limits, pointer bases, phase space, bath model, histories"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean value series of an observable in an evolving state (CSV `t,mean,offdiag`).
    Evolve(EvolveArgs),
    /// Final pointer frame (JSON) and classical weights (CSV `x,r,weight`).
    Pointer(PointerArgs),
    /// Wigner function of a position kernel (CSV `q,p,W`).
    Wigner(WignerArgs),
    /// Classical reconstruction from pointer weights (CSV `q,p,W,T`).
    Classical(ClassicalArgs),
    /// Oscillator moments in the bath model (CSV `t,meanQ,meanP,varQ,varP`).
    Bath(BathArgs),
    /// Consistency verdict of a projector family (JSON).
    Histories(HistoriesArgs),
    /// Run one experiment manifest.
    Run(RunArgs),
    /// Run every shipped manifest and aggregate the reports.
    VerifyAll(VerifyAllArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct EvolveArgs {
    /// State JSON (`{"model", "blocks"}`).
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Observable JSON.
    #[arg(long)]
    pub obs: Option<PathBuf>,
    /// `t0:t1:n`.
    #[arg(long)]
    pub times: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct PointerArgs {
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Frame JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Weights CSV output.
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct WignerArgs {
    /// Kernel JSON (`{"q", "hbar", "values"}`).
    #[arg(long)]
    pub kernel: Option<PathBuf>,
    /// Overrides the kernel's hbar.
    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long)]
    pub p_factor: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ClassicalArgs {
    /// Weights CSV as written by `pointer`.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Width of the delta approximants.
    #[arg(long)]
    pub widths: Option<f64>,
    /// Time of the trajectory density.
    #[arg(long)]
    pub t: Option<f64>,
    /// Initial angle of the trajectory density.
    #[arg(long)]
    pub a0: Option<f64>,
    /// Chart frequency.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Half-width of the square phase-space window.
    #[arg(long)]
    pub extent: Option<f64>,
    /// Points per axis.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct BathArgs {
    /// Model and initial-state JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `t0:t1:n`.
    #[arg(long)]
    pub times: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct HistoriesArgs {
    /// Density matrix JSON (rows of `[re, im]`).
    #[arg(long)]
    pub rho: Option<PathBuf>,
    /// Family JSON (`{"projectors": [...]}`).
    #[arg(long)]
    pub family: Option<PathBuf>,
    /// Hamiltonian JSON; zero when absent.
    #[arg(long)]
    pub hamiltonian: Option<PathBuf>,
    /// Comma-separated times.
    #[arg(long)]
    pub times: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Report JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyAllArgs {
    /// Manifest directory; defaults to the shipped manifests.
    #[arg(long)]
    pub dir: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run manifests concurrently.
    #[arg(long)]
    pub parallel: bool,
}
