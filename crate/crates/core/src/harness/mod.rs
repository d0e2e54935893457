//! Experiment orchestration: parameter sweeps with machine-readable output
//! and the self-verification suite behind the `verify` subcommand.

pub mod acceptance;
pub mod sweep;

pub use acceptance::{verify_suite, verify_suite_with, CheckResult, Fault, Level, Report};
pub use sweep::{
    emit_csv, parse_csv, run_sweep, FixedParams, OutputKind, Quantity, SweepMeta, SweepResult,
    SweepRow, SweepSpec, SweepVariable,
};
