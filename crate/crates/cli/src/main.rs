use std::process::ExitCode;

use clap::Parser;
use vpcal_cli::args::Cli;

fn main() -> ExitCode {
    // solver warnings reach the user through the command's own log lines
    let filter = "warn,vpcal::calibration=error,vpcal::geometry=error";
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(filter)).init();
    vpcal_cli::run(Cli::parse()).into()
}
