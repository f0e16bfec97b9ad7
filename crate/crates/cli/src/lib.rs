//! Experiment runner for regularly varying fields: config parsing, Λ
//! construction, step execution and report output.

pub mod config;
pub mod error;
pub mod lambda;
pub mod plot;
pub mod reports;
pub mod runner;
