use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vpcal::spectral::Scenario;

#[derive(Debug, Parser)]
#[command(name = "vpcal", version, about = "Color calibration for RGB LED virtual-production stages")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve M, Q, N, β and the black level from calibration captures.
    Solve(SolveArgs),
    /// Simulate the lit chart for a solved bundle.
    Simulate(SimulateArgs),
    /// Generate a synthetic calibration fixture from the spectral oracle.
    Oracle(OracleArgs),
    /// Print the panel scale factor β.
    Beta(BetaArgs),
    /// Per-channel chart error of a measured chart CSV against a target CSV.
    ChartError(ChartErrorArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Pipeline configuration (JSON); relative paths inside are resolved
    /// against its directory.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub half_extent: Option<f64>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub cond_limit_q: Option<f64>,
    #[arg(long)]
    pub cond_limit_sl: Option<f64>,
    #[arg(long)]
    pub white_reflectance: Option<f64>,
    /// Output directory, overriding the configuration's.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    /// Primary-based calibration only.
    MOnly,
    /// `M` followed by the post-correction `Q`.
    #[value(name = "m-q")]
    MQ,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// `[SRL]` set written by `solve`.
    #[arg(long)]
    pub srl: PathBuf,
    /// Environment tint `r,g,b`.
    #[arg(long, value_parser = parse_triple, conflicts_with = "env", required_unless_present = "env")]
    pub w_avg: Option<[f64; 3]>,
    /// Lat-long environment map (PFM); requires --facing.
    #[arg(long, requires = "facing")]
    pub env: Option<PathBuf>,
    /// Direction `x,y,z` the chart faces in the environment map.
    #[arg(long, value_parser = parse_triple)]
    pub facing: Option<[f64; 3]>,
    #[arg(long, value_enum, default_value = "m-q")]
    pub variant: Variant,
    /// Target chart CSV to compare against.
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long, default_value_t = vpcal::imaging::DEFAULT_WHITE_INDEX)]
    pub white_index: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "broad")]
    pub scenario: Scenario,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BetaArgs {
    #[arg(long, default_value_t = vpcal::geometry::DEFAULT_HALF_EXTENT)]
    pub half_extent: f64,
    #[arg(long, default_value_t = vpcal::geometry::DEFAULT_BETA_RESOLUTION)]
    pub resolution: usize,
}

#[derive(Debug, Args)]
pub struct ChartErrorArgs {
    pub target: PathBuf,
    pub measured: PathBuf,
    #[arg(long, default_value_t = vpcal::imaging::DEFAULT_WHITE_INDEX)]
    pub white_index: usize,
}

pub fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got {s:?}"));
    }
    let mut out = [0.0f64; 3];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p
            .parse()
            .map_err(|_| format!("{p:?} is not a number"))?;
        if !slot.is_finite() {
            return Err(format!("{p:?} is not finite"));
        }
    }
    Ok(out)
}
