//! Subcommand implementations and the shared run configuration. Each
//! command is a pure function of its [`RunConfig`] returning the text it
//! would write.

mod commands;
mod config;

pub use commands::{
    cmd_levels, cmd_mc, cmd_optimize, cmd_protocol, cmd_stats, optimize_record, sampler_config,
    OptimizeRecord, VERSION,
};
pub use config::{ConfigError, RunConfig, Subcommand, Sweep, KEYS};
