use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use driftwalk::rational;
use driftwalk::simulator::DEFAULT_CAP;
use driftwalk::Rational;

const ENV_HELP: &str = "Environment: a JSON file, inline JSON, or `kind:key=val,...`.
Inline kinds:
  equally-spaced:m=4,p=3/4
  periodic:period=5,offsets=0;2,p=1
  ceil:p=3/4,lambda=1/2
  upsilon:m=2,lambda=2/5[,p=1]
  iid:p=3/4,lambda=1/2,seed=3[,lo=-1024,hi=1024]
  explicit:p=3/4,drifts=0;4;7
  finite:N=8,p=3/4,drifts=3;5
Line kinds accept offset=x. A `.csv` file of `site,prob` rows is read as an
explicit environment.";

fn parse_rational(text: &str) -> Result<Rational, String> {
    rational::parse(text).map_err(|e| e.to_string())
}

#[derive(Parser, Debug)]
#[command(
    name = "driftwalk",
    version,
    about = "Hitting times, speeds and speed bounds for walks in two-type drift environments",
    after_help = "Probabilities and densities are exact rationals `a/b`; decimals are rejected."
)]
pub struct Cli {
    /// Master seed for everything random.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact expected hitting times on a reflected segment.
    Solve(SolveArgs),
    /// Monte Carlo speeds or hitting times.
    Simulate(SimulateArgs),
    /// Two walks driven by the same uniforms.
    Couple(CoupleArgs),
    /// Optimal drift placement, quadratic identity and rebalancing.
    Optimize(OptimizeArgs),
    /// Evaluate one closed-form speed, bound or gap.
    Bounds(BoundsArgs),
    /// Grid of (2p-1)λ - 1/S(p,λ).
    Scan(ScanArgs),
    /// Print an environment as JSON or as a CSV window.
    Env(EnvArgs),
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Segment length (absorbing site).
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long, value_parser = parse_rational)]
    pub p: Rational,
    /// Drift positions, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub drifts: Vec<u64>,
    /// Also solve for E[T_N^2].
    #[arg(long)]
    pub second_moment: bool,
    /// Also emit the piecewise-quadratic coefficients C_j, D_j.
    #[arg(long)]
    pub coeffs: bool,
    /// Solve in floating point instead.
    #[arg(long)]
    pub float: bool,
}

#[derive(Args, Debug)]
#[command(after_help = ENV_HELP)]
pub struct SimulateArgs {
    #[arg(long)]
    pub env: String,
    /// Steps per replica for a speed estimate.
    #[arg(long, conflicts_with = "target")]
    pub steps: Option<u64>,
    /// Sample hitting times of this site instead.
    #[arg(long)]
    pub target: Option<i64>,
    #[arg(long, default_value_t = 1)]
    pub reps: u64,
    /// Step cap per hitting-time sample.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: u64,
}

#[derive(Args, Debug)]
#[command(after_help = ENV_HELP)]
pub struct CoupleArgs {
    #[arg(long)]
    pub lower: String,
    #[arg(long)]
    pub upper: String,
    #[arg(long)]
    pub steps: u64,
    /// Emit both paths.
    #[arg(long)]
    pub paths: bool,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long, value_parser = parse_rational)]
    pub p: Rational,
    /// Drift count; defaults to the number of `--drifts`.
    #[arg(long)]
    pub k: Option<usize>,
    /// A placement to compare against the optimum (and rebalance at p = 1).
    #[arg(long, value_delimiter = ',')]
    pub drifts: Option<Vec<u64>>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Formula {
    /// (2p-1)λ; needs --p, --lambda.
    SpeedUpper,
    /// 1/(2m+1-m(m+1)λ); needs --m, --lambda.
    UpsilonSpeed,
    /// λ minus the Υ speed at λ = n/(mn+l); needs --n, --m, --l.
    Gap,
    /// S(p,λ) and 1/S; needs --p, --lambda.
    Jensen,
    /// (2p-1)λ/(λ+2p(1-λ)); needs --p, --lambda.
    IidSpeed,
    /// All speed bounds at (p, λ).
    Report,
    /// det H_k and det M_k, cross-checked; needs --k, --p.
    Determinant,
    /// ‖H_k‖₂ estimate against 8(2p-1)/p; needs --k, --p.
    Norm,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(long, value_enum)]
    pub formula: Formula,
    #[arg(long, value_parser = parse_rational)]
    pub p: Option<Rational>,
    #[arg(long, value_parser = parse_rational)]
    pub lambda: Option<Rational>,
    #[arg(long)]
    pub m: Option<u64>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub l: Option<u64>,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    /// `lo:hi`, inclusive.
    #[arg(long, default_value = "51/100:99/100")]
    pub p_range: String,
    /// `lo:hi`, inclusive.
    #[arg(long, default_value = "1/100:99/100")]
    pub lambda_range: String,
    /// Points per axis.
    #[arg(long, default_value_t = 50)]
    pub resolution: usize,
}

#[derive(Args, Debug)]
#[command(after_help = ENV_HELP)]
pub struct EnvArgs {
    #[arg(long)]
    pub spec: String,
    #[arg(long, value_enum, default_value = "json")]
    pub emit: Format,
    /// First site of the CSV window.
    #[arg(long, default_value_t = -16, allow_negative_numbers = true)]
    pub from: i64,
    /// Last site of the CSV window.
    #[arg(long, default_value_t = 16, allow_negative_numbers = true)]
    pub to: i64,
}
