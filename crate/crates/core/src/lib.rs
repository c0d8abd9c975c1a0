//! Multi-area load-frequency control: plant models, a global integral
//! terminal sliding-mode controller with a PI baseline, fixed-step
//! simulation, performance indices and the four-area 39-bus benchmark.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench39;
pub mod cli;
pub mod config;
pub mod control;
pub mod error;
pub mod metrics;
pub mod output;
pub mod plant;
pub mod plot;
pub mod sim;

pub use error::{LfcError, Result};
