//! `dse`: batch front end for exact doubly stochastic elements.
//!
//! Exit codes: 0 on success (JSON report on stdout), 2 on domain errors
//! (structured error JSON on stdout), 1 on I/O, parse or usage errors.

mod commands;
mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dse::Rational;

use report::Failure;

#[derive(Parser, Debug)]
#[command(
    name = "dse",
    version,
    about = "Exact doubly stochastic elements of [0,1)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check that every point is covered `n` times by domains and by images.
    Validate {
        /// DSE files; several may be given.
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        /// Worker threads for independent inputs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Distance between two DSEs of equal multiplicity.
    Distance {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Approximate a DSE by automorphisms.
    Decompose {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = parse_eps)]
        eps: Rational,
        #[arg(long)]
        out: PathBuf,
    },
    /// Orient a symmetric DSE's matrix with error below eps.
    Divide {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = parse_eps)]
        eps: Rational,
        #[arg(long)]
        out: PathBuf,
    },
    /// Halve a symmetric DSE of even multiplicity.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = parse_eps)]
        eps: Rational,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract permutations from an integer matrix with row and column sums n.
    Bvn {
        /// CSV (comma-separated integers, no header) or a JSON array of rows.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        n: u64,
        /// Decompose into n permutations instead of extracting one.
        #[arg(long)]
        decompose: bool,
    },
    /// Emit a built-in example.
    Demo {
        #[arg(long, value_enum)]
        name: DemoName,
        #[arg(long)]
        level: u32,
        /// Write the DSE here instead of inlining it in the report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum DemoName {
    Counterexample,
    Forest,
    Amplification,
}

fn parse_eps(s: &str) -> Result<Rational, String> {
    if !s.contains('/') {
        return Err(format!("expected p/q, got {s:?}"));
    }
    let eps: Rational = s.parse().map_err(|e: dse::Error| e.to_string())?;
    if !eps.is_positive() {
        return Err("eps must be positive".into());
    }
    Ok(eps)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli.command) {
        Ok(report) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            ExitCode::SUCCESS
        }
        Err(Failure::Domain(body)) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&body).expect("error serializes")
            );
            ExitCode::from(2)
        }
        Err(Failure::Input(msg)) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": { "kind": "Input", "message": msg } })
            );
            ExitCode::from(1)
        }
    }
}
