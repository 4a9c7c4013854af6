//! Per-subject rectification of motion-corrupted photoplethysmographic (PPG) beats.
//!
//! The processing chain runs beat detection and heart-rate normalization, beat
//! quality classification with a reference template, PCA reconstruction of the
//! beat matrix, and per-sample weighting of every beat. During calibration the
//! weights are found offline by particle swarm optimization; at deployment a
//! feedforward network predicts them from deep auto-encoder features, so the
//! optimizer never runs on the real-time path.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, clocks and the
//! command-line front end live in the `ppg-rectify` companion crate.
#![cfg_attr(not(test), no_std)]
// negated comparisons are how NaN is rejected; index loops mirror the algebra
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod beats;
pub mod dae;
pub mod error;
pub mod evaluation;
pub mod ma;
pub mod math;
pub mod neural;
pub mod pca;
pub mod pipeline;
pub mod pso;
pub mod quality;
pub mod record;
pub mod synthesis;

pub use error::{Error, Result};
pub use record::PpgRecord;
