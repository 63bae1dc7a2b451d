//! File formats, parallel drivers and the command-line front end for
//! [`expdyn_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod report;

pub use expdyn_core as core;
pub use error::{AppError, AppResult};
