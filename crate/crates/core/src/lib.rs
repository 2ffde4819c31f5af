//! Featurizers and a transfer-learning harness for chatter detection in
//! machining vibration signals.

// Index loops mirror the recurrences; `!(x > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod dtw;
pub mod eemd;
pub mod error;
pub mod fpa;
pub mod learn;
pub mod pipeline;
pub mod preprocess;
pub mod stats;
pub mod synth;
pub mod tda;
pub mod transfer;
pub mod wpt;

pub use error::{Error, Result};
