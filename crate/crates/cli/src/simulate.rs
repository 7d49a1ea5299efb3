use std::fs;

use vpcal::calibration::{
    chart_error, mean_relative_error, post_correct_chart, simulate_lit_chart, CalibrationBundle,
    SrlSet,
};
use vpcal::geometry::{read_env_pfm, w_avg_from_env, Direction};
use vpcal::imaging::{read_chart_csv, write_chart_csv, ChartSamples};
use vpcal::Rgb;

use crate::args::{SimulateArgs, Variant};
use crate::error::{CliError, StageExt};
use crate::solve::write_comparison_png;

pub const SIMULATED_CSV: &str = "simulated.csv";
pub const COMPARISON_PNG: &str = "comparison.png";

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOutcome {
    pub chart: ChartSamples,
    pub clamped: usize,
    /// Per-channel error against `--target`, when given.
    pub error: Option<Rgb>,
}

/// Lit chart for a solved bundle: `M` only, or `M` then `Q`, exactly as
/// `solve` computes its predictions.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulateOutcome, CliError> {
    let read = |path: &std::path::Path| {
        fs::read_to_string(path).map_err(|e| CliError::new("input", format!("{}: {e}", path.display())))
    };
    let bundle = CalibrationBundle::from_json(&read(&args.bundle)?)
        .map_err(|e| CliError::new("bundle", format!("{}: {e}", args.bundle.display())))?;
    let srl: SrlSet = serde_json::from_str(&read(&args.srl)?)
        .map_err(|e| CliError::new("srl", format!("{}: {e}", args.srl.display())))?;
    let w_avg = match (&args.w_avg, &args.env, &args.facing) {
        (Some(w), _, _) => {
            if w.iter().any(|v| *v < 0.0) {
                return Err(CliError::new("w_avg", format!("negative w_avg {w:?}")));
            }
            *w
        }
        (None, Some(env), Some(facing)) => {
            let env = read_env_pfm(env).stage("w_avg")?;
            w_avg_from_env(&env, Direction::new(*facing).stage("w_avg")?)
        }
        _ => return Err(CliError::new("w_avg", "either --w-avg or --env with --facing is required")),
    };

    let lit = simulate_lit_chart(&srl, &bundle.m, w_avg, bundle.beta).stage("simulate")?;
    let (chart, clamped) = match args.variant {
        Variant::MOnly => (lit.chart, lit.clamped),
        Variant::MQ => {
            let post = post_correct_chart(&lit.chart, &bundle.q).stage("simulate")?;
            (post.chart, lit.clamped + post.clamped)
        }
    };
    if clamped > 0 {
        log::warn!("{clamped} simulated chart components were negative and clamped to 0");
    }

    fs::create_dir_all(&args.out)
        .map_err(|e| format!("{}: {e}", args.out.display()))
        .stage("output")?;
    write_chart_csv(args.out.join(SIMULATED_CSV), &chart).stage("output")?;
    let error = match &args.target {
        Some(path) => {
            let target = read_chart_csv(path, args.white_index).stage("target")?;
            let err = chart_error(&target, &chart).stage("report")?;
            println!(
                "chart error r={:.6} g={:.6} b={:.6} mean={:.6}",
                err[0],
                err[1],
                err[2],
                mean_relative_error(err)
            );
            write_comparison_png(&args.out.join(COMPARISON_PNG), &target, &chart)?;
            Some(err)
        }
        None => {
            write_comparison_png(&args.out.join(COMPARISON_PNG), &chart, &chart)?;
            None
        }
    };
    Ok(SimulateOutcome { chart, clamped, error })
}
