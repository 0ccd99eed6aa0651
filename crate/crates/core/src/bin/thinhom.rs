use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use thinhom::config::parse_config;
use thinhom::pipeline::{exit_code, render_report, run_stage, RunOptions, Stage};

/// Homogenization toolkit for thin domains with oscillating boundaries.
#[derive(Debug, Parser)]
#[command(version = version(), about)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for the epsilon sweep (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Single worker, byte-identical output.
    #[arg(long, global = true)]
    deterministic: bool,

    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cell problem, limit problem, epsilon sweep and (if enabled) the rectangle harness.
    Run,
    /// Homogenized coefficients only.
    Cell,
    /// Coefficients and the 1D limit solution.
    Limit,
    /// Thin-domain solve at the largest epsilon of the sweep.
    SolveEps,
    /// Epsilon sweep against the limit solution.
    Converge,
    /// Rectangle harness.
    Lemma31,
    /// Re-render existing artifacts without recomputing.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.unwrap_or(Command::Run);

    if let Command::Report = command {
        let dir = match (&cli.out, &cli.config) {
            (Some(dir), _) => dir.clone(),
            (None, Some(path)) => match parse_config(path) {
                Ok(cfg) => cfg.output_dir,
                Err(e) => return fail(e),
            },
            (None, None) => PathBuf::from("out"),
        };
        return match render_report(&dir) {
            Ok((text, passed)) => {
                print!("{text}");
                ExitCode::from(if passed { 0 } else { 2 })
            }
            Err(e) => fail(e),
        };
    }

    let Some(path) = cli.config else {
        eprintln!("error: --config is required");
        return ExitCode::from(1);
    };
    let cfg = match parse_config(&path) {
        Ok(cfg) => cfg,
        Err(e) => return fail(e),
    };
    let stage = match command {
        Command::Run => Stage::Run,
        Command::Cell => Stage::Cell,
        Command::Limit => Stage::Limit,
        Command::SolveEps => Stage::SolveEps,
        Command::Converge => Stage::Converge,
        Command::Lemma31 => Stage::Lemma31,
        Command::Report => unreachable!(),
    };
    let opts = RunOptions {
        out: cli.out,
        workers: cli.workers,
        deterministic: cli.deterministic,
        verbose: cli.verbose,
    };
    let result = run_stage(stage, &cfg, &opts);
    match &result {
        Ok(outcome) => {
            for v in &outcome.verdicts {
                println!(
                    "{:<24} {}  {}",
                    v.name,
                    if v.passed { "PASS" } else { "FAIL" },
                    v.detail
                );
            }
            println!("artifacts in {}", outcome.out_dir.display());
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}

fn version() -> &'static str {
    thinhom::pipeline::toolkit_version().leak()
}

fn fail(e: thinhom::Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(1)
}
