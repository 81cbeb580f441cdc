//! IO companion to `sbo-core`: binary dataset and model-weight formats, the
//! newline-delimited-JSON oracle wire protocol (client and server), and the
//! campaign harness that batches attacks and aggregates metrics.

pub mod campaign;
pub mod dataset;
pub mod protocol;
pub mod weights;
