//! Simulation, file formats, tuning and evaluation around
//! [`hilo_fusion_core`].
//!
//! The core crate holds the algorithms and stays `no_std`; everything that
//! touches files, threads or randomness lives here.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod parity;
pub mod report;
pub mod run;
pub mod sim;
pub mod tune;
pub mod weights_io;

pub use hilo_fusion_core as core;
