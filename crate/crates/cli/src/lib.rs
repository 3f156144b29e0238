//! Command-line scenario runner built on `efl-core`.

pub mod config;
pub mod describe;
pub mod output;
pub mod runner;
