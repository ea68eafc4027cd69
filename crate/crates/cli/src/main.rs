//! `hamclosure`: verify, inspect and simulate Hamiltonian fluid closures.

mod compare;
mod config;
mod family;
mod inspect;
mod report;
mod simulate;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hamclosure::Execution;

#[derive(Parser, Debug)]
#[command(name = "hamclosure", version, about)]
struct Cli {
    /// Run everything on one thread
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run the exact bracket identity suite on closures
    Verify(verify::VerifyArgs),
    /// Inspect a closure
    #[command(subcommand)]
    Closure(inspect::ClosureCmd),
    /// Run a fluid or multi-stream simulation from a config file
    Simulate(simulate::SimulateArgs),
    /// Compare a closed fluid run with the multi-stream run of the same data
    Compare(compare::CompareArgs),
}

/// Report destinations shared by all subcommands.
#[derive(Args, Debug, Clone, Default)]
pub struct Output {
    /// Print the JSON report on stdout instead of text
    #[arg(long)]
    pub json: bool,
    /// Directory for report.json and any data files
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let (result, output) = match &cli.cmd {
        Cmd::Verify(a) => (verify::run(a, exec), &a.output),
        Cmd::Closure(c) => (inspect::run(c), c.output()),
        Cmd::Simulate(a) => (simulate::run(a), &a.output),
        Cmd::Compare(a) => (compare::run(a), &a.output),
    };
    let mut report = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    report.finish();
    let dir = report.out_dir.clone().or_else(|| output.out.clone());
    if let Some(dir) = &dir {
        if let Err(e) = report.write(dir) {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    }
    if output.json {
        println!("{}", report.to_json());
    } else {
        for line in &report.text {
            println!("{line}");
        }
        if !report.checks.is_empty() || !report.warnings.is_empty() {
            report.print_text(&["flatness"]);
        }
        if let Some(dir) = &dir {
            println!("output: {}", dir.display());
        }
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
