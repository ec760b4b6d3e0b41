//! Command-line front end for `chainfair-core`: argument and config
//! handling, CSV tables and SVG charts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod error;
pub mod plot;
pub mod table;

pub use args::{parse, Cli, ParseError};
pub use commands::run;
pub use error::CliError;
