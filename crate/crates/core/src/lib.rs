//! Dynamics of the exponential family `f_λ(z) = λe^z`.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod boxcount;
pub mod coding;
pub mod complex;
pub mod dynamics;
pub mod error;
pub mod induced;
pub mod invariant;
pub mod logpolar;
pub mod math;
pub mod rays;
pub mod search;
pub mod tower;

pub use complex::ComplexValue;
pub use error::{Error, Result};
pub use logpolar::{LambdaParts, LogPolarComplex};
pub use tower::TowerReal;
