//! Morphology modeling of social-network cascades.
//!
//! Reconstructs cascade graphs from timestamped action logs, encodes their
//! shape via depth-first traversal plus run-length encoding, fits multi-order
//! Markov chains over the encoded sequences, and predicts whether a cascade
//! grows past a size threshold from Markov-state features, benchmarked
//! against eight classical graph features.

pub mod cascade;
pub mod classifier;
pub mod encode;
pub mod error;
pub mod features;
pub mod graphstats;
pub mod markov;
pub mod par;
pub mod pipeline;
pub mod synth;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
