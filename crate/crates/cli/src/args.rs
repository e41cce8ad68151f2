use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "hardy", version, about = "Spectral numbers of weighted Hardy-type operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral triple with exactly `n` interior zeros
    Solve(SolveArgs),
    /// Spectral numbers for n = 0..=nmax
    Spectrum(SweepArgs),
    /// Limit table for n * lambda_n^(-1/q) against the predicted constant
    Asymptote(SweepArgs),
    /// Kolmogorov, Bernstein and approximation-number estimates
    Widths(WidthsArgs),
    /// Reference eigenvalues that bypass the nonlinear engine
    Oracle(OracleArgs),
    /// Run the built-in consistency checks
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Max,
    Min,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Source exponent p > 1
    #[arg(long)]
    pub p: Option<f64>,
    /// Target exponent q > 1
    #[arg(long)]
    pub q: Option<f64>,
    /// Interval as `a,b`
    #[arg(long, allow_hyphen_values = true)]
    pub interval: Option<String>,
    /// Weight u(x)
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<String>,
    /// Weight v(x)
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<String>,
    /// Grid with 2^L + 1 nodes
    #[arg(long)]
    pub grid_level: Option<u32>,
    /// Relative lambda tolerance of the fixed-point scheme
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of multistart sign patterns
    #[arg(long)]
    pub starts: Option<usize>,
    /// Which end of the spectral set to report (default: max if q < p, else min)
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// JSON problem file; explicit flags take precedence
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0)]
    pub n: usize,
    /// Write f as `x,value` CSV
    #[arg(long)]
    pub dump_f: Option<PathBuf>,
    /// Write g as `x,value` CSV
    #[arg(long)]
    pub dump_g: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 20)]
    pub nmax: usize,
}

#[derive(Debug, Clone, Args)]
pub struct WidthsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub k_iters: usize,
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    /// shoot for u = v = 1, singular values for p = q = 2
    Auto,
    Classical,
    Shoot,
    Svd,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = OracleKind::Auto)]
    pub kind: OracleKind,
    #[arg(long, default_value_t = 20_000)]
    pub ode_steps: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SelftestArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}
