//! Scenario files, built-in presets, CSV output and the command line.

pub mod cli;
pub mod presets;
pub mod scenario;
pub mod trace_csv;
