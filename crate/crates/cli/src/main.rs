use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use killing_flow_cli::{load_config, run, Command, Outcome};

/// Mean curvature flow of Killing graphs.
///
/// Log verbosity follows `KGFLOW_LOG` (error, warn, info, debug, trace).
#[derive(Debug, Parser)]
#[command(name = "kgflow", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Nodes per axis; overrides `domain.resolution`.
    #[arg(long)]
    resolution: Option<usize>,
    /// Time step; overrides `run.dt`.
    #[arg(long)]
    dt: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KGFLOW_LOG", "warn")).init();
    let args = Args::parse();
    let scenario = load_config(&args.config)
        .map(|c| c.with_overrides(args.out.clone(), args.resolution, args.dt))
        .and_then(|c| c.resolve());
    let scenario = match scenario {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return code(Outcome::ConfigError);
        }
    };
    match run(&scenario, args.command) {
        Ok(report) => {
            for (k, v) in &report.diagnostics {
                println!("{k} = {v}");
            }
            if let Some(r) = &report.stop_reason {
                println!("stop_reason = {r}");
            }
            code(report.outcome)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let outcome = match e.downcast_ref::<killing_flow::Error>() {
                Some(killing_flow::Error::Solver { .. }) => Outcome::NonConvergence,
                Some(killing_flow::Error::Config(_)) => Outcome::ConfigError,
                Some(killing_flow::Error::Numeric(_)) => Outcome::Divergence,
                _ => Outcome::ConfigError,
            };
            code(outcome)
        }
    }
}

fn code(o: Outcome) -> ExitCode {
    ExitCode::from(o.code() as u8)
}
