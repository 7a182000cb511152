//! Command-line front end: configuration files, synthetic problem
//! generation, the color-recovery demo, verification, and rate reporting.

pub mod commands;
pub mod config;
pub mod image;

pub use commands::{cmd_demo_color, cmd_gen, cmd_rates, cmd_solve, cmd_verify, VerifyScope};
pub use config::{IndexMeta, RunConfig};
