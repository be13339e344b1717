use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vcosim::harness::{error_exit_code, execute, Experiment, Invocation};

/// Behavioral VCO sigma-delta ADC simulator.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// run | sweep-amp | sweep-freq | ntf | stf | compare | higher-order
    #[arg(value_parser = parse_experiment)]
    experiment: Experiment,
    /// JSON configuration ("schema": 1).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; must not exist or be empty.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    s.parse().map_err(|e: vcosim::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let inv = Invocation {
        experiment: cli.experiment,
        config_path: cli.config,
        out_dir: cli.out,
        seed: cli.seed,
        jobs: cli.jobs,
    };
    match execute(&inv) {
        Ok(status) => {
            if status.exit_code() != 0 {
                eprintln!("vcosim: loop flagged unlocked or unstable; see metrics.json");
            }
            ExitCode::from(status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("vcosim: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
