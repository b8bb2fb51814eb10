use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use lagflow::cli::{execute, Mode, RunConfig};

/// Lagrangian mean curvature flow with the second boundary condition.
///
/// Exit status: 0 when the run passed, 1 when it finished but failed a
/// convergence or monitor check, 2 on configuration or runtime errors.
#[derive(Parser, Debug)]
#[command(name = "lagflow", version)]
struct Args {
    /// flow | steady | legendre-check | monitor-replay
    mode: Mode,

    /// Run configuration (`key = value` lines)
    #[arg(long)]
    config: PathBuf,

    /// Override a configuration entry, e.g. `--set grid.ns=24`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Output directory
    #[arg(long, env = "LAGFLOW_OUT", default_value = "lagflow-out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = RunConfig::load(&args.config, &args.overrides).and_then(|cfg| execute(Some(args.mode), &cfg, &args.out));
    match result {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            println!("outputs in {}", args.out.display());
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("lagflow: run did not pass");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("lagflow: {}: {e}", args.config.display());
            ExitCode::from(2)
        }
    }
}
