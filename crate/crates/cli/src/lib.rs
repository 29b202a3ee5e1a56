//! Command-line front end: file formats and command orchestration.

pub mod args;
pub mod budgets;
pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod record;
pub mod table;
