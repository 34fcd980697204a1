//! Command-line front end: scenario files, expression parsing, CSV output
//! and subcommand drivers.

pub mod config;
pub mod expr;
pub mod output;
pub mod run;

pub use config::{load_config, parse_config, write_config, ConfigError, Scenario, ScenarioConfig};
pub use run::{run, Command, Outcome, RunReport};
