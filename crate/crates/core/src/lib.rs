//! Leakage-aware rug-pull forensics for token projects.
//!
//! The crate labels projects as dead using a three-condition on-chain
//! signature, extracts multimodal features strictly before a causal cutoff,
//! assembles temporally split datasets and scores probabilistic classifiers.

pub mod dataset;
pub mod decimal;
pub mod features;
pub mod harness;
pub mod ingest;
pub mod labeler;
pub mod model;
pub mod synthgen;
pub mod time;
pub mod util;

pub use decimal::Decimal;
pub use time::Timestamp;
