//! Command-line front end for the [`aoi_evt`] library: configuration
//! layering (presets < config file < flags), the five subcommands, and
//! byte-stable report rendering.

pub mod commands;
pub mod config;
pub mod report;
