//! Command-line entry point.
//!
//! Usage: `multinorm <subcommand> [config.txt]`
//!
//! Subcommands: normalize, sinkhorn, convexproj, train, bench, verify.
//! Run parameters come from the plain-text config (see `config`); the
//! command line carries only the subcommand and the config path, so
//! every run is reproducible from its echoed config file.
//!
//! Exit codes: 0 success, 1 configuration or parse error, 2 numeric or
//! degenerate-input error, 3 training divergence, 4 verification
//! failure.

mod commands;
mod config;

use config::Subcommand;
use multinorm_core::error::Error;
use std::fs;

const USAGE: &str = "\
usage: multinorm <subcommand> [config.txt]

subcommands:
  normalize    alternating multi-normalization of a matrix file
  sinkhorn     square-root Sinkhorn scaling with diagnostics
  convexproj   convex multi-ball projection of a vector
  train        one optimizer run on a synthetic problem
  bench        a matrix of optimizers compared on one problem
  verify       run the full invariant suite (exit 4 on failure)

exit codes: 1 config, 2 numeric/degenerate, 3 divergence, 4 verification
";

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. }
        | Error::Config { .. }
        | Error::Arity { .. }
        | Error::Range { .. }
        | Error::AssumptionViolated { .. }
        | Error::Dim { .. } => 1,
        Error::NonFinite { .. }
        | Error::Singular { .. }
        | Error::Degenerate { .. }
        | Error::Domain { .. } => 2,
        Error::Divergence { .. } => 3,
    }
}

fn real_main() -> i32 {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" {
        print!("{USAGE}");
        return if args.is_empty() { 1 } else { 0 };
    }
    let subcommand = match Subcommand::parse(&args[0]) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            eprint!("{USAGE}");
            return 1;
        }
    };
    if args.len() > 2 {
        eprintln!("error: unexpected extra arguments after the config path");
        return 1;
    }
    let text = match args.get(1) {
        Some(path) => match fs::read_to_string(path) {
            Ok(text) => text,
            Err(e) => {
                eprintln!("error: cannot read {path}: {e}");
                return 1;
            }
        },
        None => String::new(),
    };
    let cfg = match config::parse_config(&text, Some(subcommand)) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    match commands::run(&cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn main() {
    std::process::exit(real_main());
}
