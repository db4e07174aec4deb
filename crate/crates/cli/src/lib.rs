//! Library side of the `bloch` command-line tool: config parsing, the
//! per-command jobs, output persistence and the validation suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod jobs;
pub mod output;
pub mod validate;
