//! File formats and sub-commands around `divfund-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod csv;
pub mod error;

pub use config::{Config, ParseError};
pub use error::CliError;
