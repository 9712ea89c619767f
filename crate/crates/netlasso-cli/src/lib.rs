//! Library side of the `netlasso` command-line tool: argument surfaces,
//! result serialization, the run manifest, and the three experiment
//! pipelines (networked SVM, housing regression, event detection) plus the
//! scaling benchmark. `main` is a thin parse-and-dispatch wrapper so the
//! pipelines stay directly testable.

pub mod cli;
pub mod commands;
pub mod error;
pub mod experiments;
pub mod objfile;
pub mod output;

pub use error::{exit_code, CliError};
