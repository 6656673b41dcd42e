//! Monte Carlo simulator of a STAR-RIS integrated sensing and communication
//! transceiver.
//!
//! A feeder illuminates a STAR-RIS that re-radiates a pulse train into both
//! half-spaces with per-pulse Hadamard codes. A collocated radar receiver
//! runs a four-hypothesis GIC detector on the slow-time samples, while one
//! user per side decodes the slot messages without channel knowledge.

pub mod channel;
pub mod codebook;
pub mod comm;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod radar;
pub mod rng;
pub mod starris;

pub use error::{Error, Result};
