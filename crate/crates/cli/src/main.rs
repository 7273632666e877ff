use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use minkflow_cli::run::{EXIT_FAILED, EXIT_VIOLATIONS};
use minkflow_cli::{oracle_command, parse_config, run_command, RunOptions};

/// Spacelike mean curvature flow with a Neumann angle condition.
#[derive(Parser, Debug)]
#[command(name = "minkflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the flow described by a TOML configuration.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for Fourier initial data.
        #[arg(long)]
        seed: Option<u64>,
        /// Skip the a priori bound checks.
        #[arg(long)]
        no_checks: bool,
    },
    /// Shoot the radial translator on a disk and print its speed.
    Oracle {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 4096)]
        n_pts: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            no_checks,
        } => {
            let text = match fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(EXIT_FAILED);
                }
            };
            let parsed = match parse_config(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(EXIT_FAILED);
                }
            };
            let options = RunOptions {
                out,
                seed,
                no_checks,
            };
            match run_command(&parsed, &options) {
                Ok(report) => {
                    match (&report.error, report.lambda) {
                        (Some(e), _) => eprintln!("run failed: {e}"),
                        (None, Some(l)) => println!("translator detected, lambda = {l}"),
                        (None, None) => println!("run finished without detecting a translator"),
                    }
                    if report.exit_code == EXIT_VIOLATIONS {
                        eprintln!("{} bound violations", report.violations);
                    }
                    println!("output in {}", report.out_dir.display());
                    ExitCode::from(report.exit_code)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_FAILED)
                }
            }
        }
        Command::Oracle {
            alpha,
            radius,
            out,
            n_pts,
        } => match oracle_command(alpha, radius, n_pts, &out) {
            Ok(lambda) => {
                println!("lambda = {lambda}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_FAILED)
            }
        },
    }
}
