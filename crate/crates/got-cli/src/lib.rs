//! Library surface of the harness: configuration, the solve/bench/
//! simulate/replay commands, and result types. The `got` binary is a thin
//! argument parser over these.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_bench, cmd_replay, cmd_simulate, cmd_solve, ArmStrategy, BenchSummary, RunError, RunResult,
};
pub use config::{BackendChoice, ConfigError, LlmSettings, RunConfig};
