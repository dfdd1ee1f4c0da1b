use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "concfield",
    version,
    about = "Concentration bounds for suprema of random fields"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Supremum bound for a field model read from JSON.
    Bound(BoundArgs),
    /// Quadratic-form deviation quantiles.
    #[command(subcommand)]
    Quadform(QuadformCmd),
    /// Chaining entropy of the Euclidean ball family.
    #[command(subcommand)]
    Chaining(ChainingCmd),
    /// Eigenvalue bounds for sums of random matrices.
    #[command(subcommand)]
    Eigen(EigenCmd),
    /// Monte Carlo coverage checks.
    #[command(subcommand)]
    Mc(McCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file, written atomically; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub x: Grid,
    /// Shorthand for `--format csv`.
    #[arg(long, conflicts_with = "format")]
    pub csv: bool,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum QuadformCmd {
    /// Deviation quantile `z(x, B)` on a grid of `x`.
    Z(QuadformZArgs),
}

#[derive(Debug, Args)]
pub struct QuadformZArgs {
    #[arg(long)]
    pub b: PathBuf,
    /// Real value or `auto` (`10·√p` with `p = tr B / λmax(B)`).
    #[arg(long, default_value = "auto")]
    pub g: GSpec,
    #[arg(long)]
    pub x: Grid,
    /// Use the running maximum of the piecewise quantile.
    #[arg(long)]
    pub monotone_envelope: bool,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum ChainingCmd {
    /// Covering ratios `M_k`, entropy `Q` and `c1 = Q/p`.
    Q(ChainingQArgs),
}

#[derive(Debug, Args)]
pub struct ChainingQArgs {
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = 1.0)]
    pub r0: f64,
    /// Estimate `M_k` by grid volume counting (p ≤ 3).
    #[arg(long)]
    pub numeric: bool,
    /// Grid cells per small-ball radius.
    #[arg(long, default_value_t = 8, requires = "numeric")]
    pub grid: usize,
    /// Number of scales estimated numerically.
    #[arg(long, default_value_t = 6, requires = "numeric")]
    pub k_max: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum EigenCmd {
    /// Compare the field-based and matrix Bernstein eigenvalue bounds.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Mean `E X₁`: a JSON matrix file or `spiked:<top>:<bulk>`.
    #[arg(long, default_value = "spiked:20:5")]
    pub mean: MeanSpec,
    #[arg(long)]
    pub n_grid: UsizeList,
    #[arg(long)]
    pub p_grid: UsizeList,
    #[arg(long)]
    pub x_grid: Grid,
    #[arg(long, default_value = "bounded:0.5")]
    pub noise: NoiseSpec,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the crossover frontier as CSV `n,p,x_min`.
    #[arg(long)]
    pub frontier: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum McCmd {
    /// Gaussian quadratic forms against the deviation quantile.
    Quadform(McQuadformArgs),
    /// Penalized quadratic field against the supremum bound.
    Field(McFieldArgs),
    /// Top eigenvalue tails against either eigenvalue bound.
    Eigen(McEigenArgs),
}

#[derive(Debug, Args)]
pub struct McCommon {
    #[arg(long)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub x: Grid,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct McQuadformArgs {
    #[command(flatten)]
    pub common: McCommon,
    /// JSON matrix; identity of size `--p` when absent.
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// JSON covariance with `Σ ⪯ I`; identity when absent.
    #[arg(long)]
    pub sigma: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    #[arg(long, default_value = "auto")]
    pub g: GSpec,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Dimension used with a spiked mean.
    #[arg(long, default_value_t = 4)]
    pub p: usize,
    #[arg(long, default_value = "spiked:20:5")]
    pub mean: MeanSpec,
    #[arg(long, default_value = "gaussian:0.2")]
    pub noise: NoiseSpec,
}

#[derive(Debug, Args)]
pub struct McFieldArgs {
    #[command(flatten)]
    pub common: McCommon,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EigenSide {
    Paper,
    Bernstein,
}

#[derive(Debug, Args)]
pub struct McEigenArgs {
    #[command(flatten)]
    pub common: McCommon,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[arg(long, value_enum, default_value = "paper")]
    pub bound: EigenSide,
}

/// Grid of `x` values: `a,b,c` or `a..b:step` (inclusive of `b`).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let values = if let Some((range, step)) = s.split_once(':') {
            let (a, b) = range
                .split_once("..")
                .ok_or_else(|| format!("malformed range `{s}`, expected a..b:step"))?;
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) {
                return Err(format!("range step must be positive in `{s}`"));
            }
            if b < a {
                return Err(format!("empty range `{s}`"));
            }
            // tolerate rounding so `1..3:1` ends at 3
            let count = ((b - a) / step + 1e-9).floor() as usize;
            (0..=count).map(|i| a + i as f64 * step).collect()
        } else {
            s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        };
        if values.is_empty() {
            return Err("empty grid".into());
        }
        Ok(Grid(values))
    }
}

fn num(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsizeList(pub Vec<usize>);

impl FromStr for UsizeList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|_| format!("`{t}` is not a positive integer"))
            })
            .collect::<Result<Vec<usize>, _>>()?;
        if v.is_empty() || v.contains(&0) {
            return Err("list entries must be positive".into());
        }
        Ok(UsizeList(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GSpec {
    Auto,
    Value(f64),
}

impl FromStr for GSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(GSpec::Auto);
        }
        let g = num(s)?;
        if !(g > 0.0) {
            return Err(format!("g must be positive, got {s}"));
        }
        Ok(GSpec::Value(g))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeanSpec {
    Spiked { top: f64, bulk: f64 },
    File(PathBuf),
}

impl FromStr for MeanSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.strip_prefix("spiked:") {
            Some(rest) => {
                let (top, bulk) = rest
                    .split_once(':')
                    .ok_or_else(|| format!("expected spiked:<top>:<bulk>, got `{s}`"))?;
                Ok(MeanSpec::Spiked {
                    top: num(top)?,
                    bulk: num(bulk)?,
                })
            }
            None => Ok(MeanSpec::File(PathBuf::from(s))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    Gaussian(f64),
    Bounded(f64),
}

impl FromStr for NoiseSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, scale) = s
            .split_once(':')
            .ok_or_else(|| format!("expected gaussian:<scale> or bounded:<scale>, got `{s}`"))?;
        let scale = num(scale)?;
        if scale < 0.0 {
            return Err("noise scale must be nonnegative".into());
        }
        match kind {
            "gaussian" => Ok(NoiseSpec::Gaussian(scale)),
            "bounded" => Ok(NoiseSpec::Bounded(scale)),
            other => Err(format!("unknown noise model `{other}`")),
        }
    }
}
