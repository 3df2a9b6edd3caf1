//! Configuration, runners and output writers for the four experiments.

pub mod config;
pub mod output;
pub mod run;
pub mod schedule;

pub use config::{parse_config, parse_config_str, parse_config_with, Config, ConfigError};
pub use run::{run_and_write, Scenario};
pub use schedule::{Schedule, ScheduleForm};
