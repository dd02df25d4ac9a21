use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod cmd_analyze;
mod cmd_padic;
mod cmd_realize;
mod cmd_report;
mod cmd_simulate;
mod common;

use common::CmdError;

/// Exact p-adic arithmetic, frequency realizations, and an interference
/// simulator behind one binary. Artifacts land in --out-dir; exit code 0
/// means success, 1 means a verification or statistical check failed, 2
/// means the invocation or its inputs were unusable.
#[derive(Parser)]
#[command(name = "padic-tools", version, propagate_version = true)]
struct Cli {
    /// Directory for generated artifacts
    #[arg(long, global = true, env = "PADIC_TOOLS_OUT", default_value = "out")]
    out_dir: PathBuf,
    /// Print per-checkpoint and per-replica detail
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact p-adic arithmetic on rational literals
    #[command(subcommand)]
    Padic(cmd_padic::PadicOp),
    /// Plan, generate, and verify p-adic frequency realizations
    Realize(cmd_realize::RealizeArgs),
    /// Stabilization and complexity analysis of a 0/1 event sequence
    Analyze(cmd_analyze::AnalyzeArgs),
    /// Run an interference scenario from a JSON document
    Simulate(cmd_simulate::SimulateArgs),
    /// Render a histogram CSV into an SVG chart and text summary
    Report(cmd_report::ReportArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let result = match cli.command {
        Command::Padic(op) => cmd_padic::run(op),
        Command::Realize(args) => cmd_realize::run(args, &cli.out_dir, cli.verbose),
        Command::Analyze(args) => cmd_analyze::run(args, &cli.out_dir, cli.verbose),
        Command::Simulate(args) => cmd_simulate::run(args, &cli.out_dir, cli.verbose),
        Command::Report(args) => cmd_report::run(args, &cli.out_dir, cli.verbose),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Failed(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}
