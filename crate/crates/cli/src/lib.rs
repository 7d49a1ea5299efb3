//! Command-line front end for the stage calibration pipeline.

pub mod args;
pub mod config;
pub mod error;
pub mod fixture;
pub mod simulate;
pub mod solve;

use std::path::Path;

use vpcal::calibration::{chart_error, mean_relative_error};
use vpcal::geometry::compute_beta;
use vpcal::imaging::read_chart_csv;

use args::{Cli, Command};
use config::PipelineConfig;
use error::{CliError, Status, StageExt};

/// Runs one command, printing errors to stderr, and returns its status.
pub fn run(cli: Cli) -> Status {
    match dispatch(cli.command) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            Status::Error
        }
    }
}

fn dispatch(command: Command) -> Result<Status, CliError> {
    match command {
        Command::Solve(args) => {
            let cfg = PipelineConfig::load(&args)?;
            let outcome = solve::cmd_solve(&cfg)?;
            print_solve_summary(&outcome);
            if outcome.n_available() {
                Ok(Status::Success)
            } else {
                Ok(Status::SoftFailure)
            }
        }
        Command::Simulate(args) => {
            let out = simulate::cmd_simulate(&args)?;
            println!("wrote {}", args.out.join(simulate::SIMULATED_CSV).display());
            if out.clamped > 0 {
                println!("clamped components: {}", out.clamped);
            }
            Ok(Status::Success)
        }
        Command::Oracle(args) => {
            let config = fixture::cmd_oracle(args.seed, args.scenario, &args.out)?;
            println!("wrote {}", config.display());
            Ok(Status::Success)
        }
        Command::Beta(args) => {
            let beta = compute_beta(args.half_extent, args.resolution).stage("beta")?;
            println!("{beta}");
            Ok(Status::Success)
        }
        Command::ChartError(args) => {
            let err = cmd_chart_error(&args.target, &args.measured, args.white_index)?;
            println!(
                "r={:.6} g={:.6} b={:.6} mean={:.6}",
                err[0],
                err[1],
                err[2],
                mean_relative_error(err)
            );
            Ok(Status::Success)
        }
    }
}

pub fn cmd_chart_error(target: &Path, measured: &Path, white_index: usize) -> Result<vpcal::Rgb, CliError> {
    let t = read_chart_csv(target, white_index).stage("target")?;
    let m = read_chart_csv(measured, white_index).stage("measured")?;
    chart_error(&t, &m).stage("report")
}

fn print_solve_summary(outcome: &solve::SolveOutcome) {
    let r = &outcome.report;
    println!("beta {:.6}", r.beta.value);
    println!("w_avg {:?} ({})", r.w_avg.value, r.w_avg.source);
    let e = &r.chart_error;
    println!("chart error M only  {:.6}", e.lit_m_only.mean);
    println!("chart error M + Q   {:.6}", e.lit_m_q.mean);
    println!("Q condition number  {:.3e}", r.diagnostics.cond_q);
    println!("wrote {}", outcome.output_dir.display());
}
