//! Tick-level simulator of an 8-bit data-acquisition interface and the
//! knife-tool wear-compensation loop it drives.

// `!(x > 0.0)` is the NaN-rejecting form used by the validators
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adc;
pub mod check;
pub mod compensator;
pub mod display;
pub mod error;
pub mod exec;
pub mod link;
pub mod plant;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod sweep;
pub mod trace;

pub use error::{Error, Result};
