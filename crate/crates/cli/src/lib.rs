//! Configuration-driven runner for the kinwave lead-vehicle experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod runner;

pub use config::{load_spec, load_spec_arg, serialize, ConfigError, RunSpec};
