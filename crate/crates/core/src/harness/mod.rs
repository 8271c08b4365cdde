//! Configuration, randomized suites, scenario runners and artifact output
//! behind the `facetflow` command.

pub mod config;
pub mod output;
pub mod scenarios;
pub mod suites;

pub use config::{parse_config, parse_config_for, Command, ConfigError, RunConfig, Scenario, DEFAULT_SEED};
pub use scenarios::{default_out, load, run, Check, Report, RunError};
