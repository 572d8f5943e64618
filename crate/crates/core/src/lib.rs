//! Interleaved multi-task learning of effect-prediction models.
//!
//! A single network learns several robot-manipulation effect models at
//! once. A shared encoder feeds per-task encoders whose latent codes are
//! mixed by attention, and an arbitration rule picks which task trains in
//! each epoch based on learning progress and energy use.

pub mod arbitration;
pub mod error;
pub mod harness;
pub mod net;
pub mod nn;
pub mod tasks;

pub use error::{Error, Result};
