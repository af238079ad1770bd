//! Link-level simulator for a two-phase downlink transmission protocol in
//! multi-relay MIMO-OFDMA cells: channels are decomposed into spatial
//! multiplexing components (SMCs), compatible SMCs are grouped for
//! simultaneous zero-forcing transmission, and achievable capacity is
//! evaluated by Monte-Carlo sweeps.

pub mod beamform;
pub mod capacity;
pub mod channel;
pub mod config;
pub mod decompose;
pub mod error;
pub mod grouping;
pub mod matrixkit;
pub mod report;
pub mod sim;
pub mod topology;
pub mod validate;

pub use error::{Error, Result};
