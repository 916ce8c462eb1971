use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use varexp_cli::{load_config, run, RunOptions};

/// Run a variable-exponent experiment described by a TOML config.
#[derive(Debug, Parser)]
#[command(name = "varexp", version)]
struct Args {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every random draw; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let options = RunOptions {
        out: args.out,
        seed: args.seed,
    };
    let outcome = load_config(&args.config).and_then(|config| run(&config, &options));
    match outcome {
        Ok(outcome) => {
            if !args.quiet {
                println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("summary is valid JSON"));
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
