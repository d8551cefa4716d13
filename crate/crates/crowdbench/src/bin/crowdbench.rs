//! Benchmark CLI entry point.

use std::process::ExitCode;

fn main() -> ExitCode {
    crowdbench::cli::main()
}
