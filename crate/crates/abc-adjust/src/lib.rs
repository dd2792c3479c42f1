//! File formats, reports and command implementations for the `abc-adjust`
//! command-line tool.
//!
//! All numeric work is delegated to [`abc_adjust_core`]; this crate reads
//! and writes delimited text and wires the pipeline together.

pub mod artifacts;
pub mod commands;
pub mod config;
mod error;
pub mod format;
pub mod table;

pub use error::{Error, Result};

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for invalid configuration or arguments.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for unreadable or invalid input data.
pub const EXIT_DATA: i32 = 3;
/// Exit status for numerical failures inside the pipeline.
pub const EXIT_NUMERICAL: i32 = 4;
