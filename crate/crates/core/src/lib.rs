//! Crowd-flow topology from a single mmWave radar.
//!
//! Raw FMCW samples are reduced to sparse per-window point clouds, turned
//! into a pruned and smoothed flow field, and summarized as a directed
//! graph with split ratios plus divergence and curl maps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cloud;
pub mod error;
pub mod eval;
pub mod flowfield;
pub mod frontend;
pub mod geometry;
pub mod graph;
pub mod grid;
pub mod io;
pub mod pipeline;
pub mod semantics;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
