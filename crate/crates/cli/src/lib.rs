//! Command-line front end: config parsing, CSV/plot-script emission and the
//! four subcommands (`simulate`, `sweep`, `verify`, `diagnose`).
//!
//! Exit codes: 0 success, 1 numerical failure, 2 configuration error.

pub mod commands;
pub mod config;
pub mod csvfmt;
pub mod plot;
