//! Reproducible experiment runner for contaminated best-arm identification.
//!
//! [`config`] parses and validates TOML experiment files, [`runner`] executes
//! them and writes CSV output, [`verify`] holds the invariant suites, and
//! [`app`] implements the command line.

pub mod app;
pub mod config;
pub mod runner;
pub mod verify;
