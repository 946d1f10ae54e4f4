//! File formats, experiment configuration and the batch runner behind the
//! `feedcap` command-line tool.
//!
//! Every command goes through [`run::run_config`]. Randomness comes from the
//! config seed only: trial `n` uses `derive_seed(seed, n)` and optimizer
//! restart `r` uses `derive_seed(seed, r)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod format;
pub mod reference;
pub mod report;
pub mod run;
pub mod spec;

pub use config::{Command, ExperimentConfig};
pub use error::{CliError, Result};
pub use run::{run_config, RunOutcome};
pub use spec::ChannelSpec;
