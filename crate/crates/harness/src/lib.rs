//! Command-line front end: instance generation, single runs, sweeps and
//! oracle queries.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error,
//! 4 budget or resource error.

pub mod cli;
pub mod error;
pub mod output;
pub mod runner;
pub mod seeds;
pub mod sweep;

pub use error::{HarnessError, Result};
