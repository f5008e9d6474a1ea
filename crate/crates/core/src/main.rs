use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use oscbound::harness::{compare_runs, parse_config_for, resolve_workers, run, Mode};

#[derive(Parser)]
#[command(
    name = "oscbound",
    version,
    about = "Boundary oscillation inequality experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and check the inequality for every planned run.
    Verify(RunArgs),
    /// Check the mean value property of a solution or subsolution.
    Meanvalue(RunArgs),
    /// Search for boundary data maximizing the inequality ratio.
    Extremal(RunArgs),
    /// Verify over the full p × h product and summarize refinement.
    Sweep(RunArgs),
    /// Summarize refinement across verify/sweep CSVs that differ only in h.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CompareArgs {
    /// CSV files written by verify or sweep.
    #[arg(required = true, num_args = 2..)]
    csv: Vec<PathBuf>,
    /// Also write refinement.csv into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(mode: Mode, args: RunArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let mut config = match parse_config_for(&text, Some(mode)) {
        Ok(c) => c,
        Err(diags) => {
            for d in &diags.0 {
                eprintln!("{}: {d}", args.config.display());
            }
            return ExitCode::from(2);
        }
    };
    if let Some(out) = args.out {
        config.out_dir = out;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let workers = resolve_workers(config.workers, args.workers);
    match run(&config, workers) {
        Ok(summary) => {
            for a in &summary.artifacts {
                println!("wrote {}", a.display());
            }
            for f in &summary.failures {
                eprintln!("FAIL {f}");
            }
            if summary.passed() {
                println!("{mode}: {} rows, all gated checks passed", summary.rows);
                ExitCode::SUCCESS
            } else {
                eprintln!("{mode}: {} gated checks failed", summary.failures.len());
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("{mode}: {e}");
            ExitCode::FAILURE
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify(a) => execute(Mode::Verify, a),
        Command::Meanvalue(a) => execute(Mode::MeanValue, a),
        Command::Extremal(a) => execute(Mode::Extremal, a),
        Command::Sweep(a) => execute(Mode::Sweep, a),
        Command::Compare(a) => match compare_runs(&a.csv) {
            Ok(summary) => {
                print!("{summary}");
                if let Some(dir) = a.out {
                    let path = dir.join("refinement.csv");
                    if let Err(e) = std::fs::create_dir_all(&dir)
                        .map_err(Into::into)
                        .and_then(|_| summary.write_csv(&path))
                    {
                        eprintln!("compare: {e}");
                        return ExitCode::FAILURE;
                    }
                    println!("wrote {}", path.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::FAILURE
            }
        },
    }
}
