//! Configuration-driven experiment runner for the `qubit-interleave` crate.
//!
//! Each subcommand reads a config, runs seeded trials through the
//! reconstruction and fitting pipeline, and writes CSV artifacts plus a
//! `summary.json` into the output directory.

pub mod config;
pub mod harness;

pub use config::{ConfigError, ExperimentConfig, Sweep, SweepAxis};
pub use harness::{
    report_timing, run_reconstruction, run_spectrum, run_timing, sweep_estimates, write_sweep, HarnessError, SweepRow,
};
