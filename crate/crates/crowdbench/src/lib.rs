//! Batch benchmarking around the core crowd-navigation simulation.
//!
//! This crate adds everything that needs an operating system: the
//! newline-delimited JSON protocol for external policy processes, the
//! seeded batch runner with worker-count-independent output, report and
//! plot emission, and the command-line interface.

pub mod bench;
pub mod cli;
pub mod driver;
pub mod external;
pub mod ingest;
pub mod plot;
pub mod protocol;
pub mod report;

pub use crowdbench_core;
