use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rlm_core::io::{execute, parse_config, Command};

/// Reduced Lagrange multiplier experiments.
#[derive(Debug, Parser)]
#[command(name = "rlm", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Solve every case of the config and optionally export VTK fields.
    Solve(RunArgs),
    /// Run the case product and fit convergence rates.
    Sweep(RunArgs),
    /// Estimate the discrete inf-sup constant.
    Infsup(RunArgs),
    /// Run reduced and full-order solves side by side.
    CompareFull(RunArgs),
    /// Compare Robin coupling against the Dirichlet solve.
    Robin(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory [default: the config's `output`, else ./out].
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Worker threads for sweeps; overrides the config.
    #[arg(long, value_name = "K", value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
}

fn run(cmd: Command, args: RunArgs) -> Result<i32, rlm_core::Error> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| rlm_core::Error::Io {
        path: args.config.clone(),
        source: e,
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(w) = args.workers {
        cfg.workers = w as usize;
    }
    let out = args
        .output
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("./out"));
    let summary = execute(cmd, &cfg, &out)?;
    println!(
        "{} rows, {} failed cases, output in {}",
        summary.rows,
        summary.failures.len(),
        out.display()
    );
    for f in &summary.failures {
        eprintln!("failed: {}: {}", f.case, f.message);
    }
    Ok(summary.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (cmd, args) = match cli.command {
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Infsup(a) => (Command::InfSup, a),
        Cmd::CompareFull(a) => (Command::CompareFull, a),
        Cmd::Robin(a) => (Command::Robin, a),
    };
    match run(cmd, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
