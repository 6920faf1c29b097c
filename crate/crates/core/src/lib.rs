//! Besov capacities on sampled metric spaces via hyperbolic fillings.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod caplab;
pub mod cli;
pub mod energy;
pub mod error;
pub mod filling;
pub mod qs;
pub mod space;
pub mod stats;
pub mod uniformize;

pub use error::{Error, Result};
