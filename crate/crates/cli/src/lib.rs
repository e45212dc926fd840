//! Command-line front end for relaymimo: scenario sweeps to CSV.

pub mod commands;
pub mod output;
pub mod presets;
