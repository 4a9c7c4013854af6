//! File formats, run configuration and the command-line front end for
//! [`ppg_rectify_core`].

// negated comparisons are how NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;

pub use error::{CliError, Result};
