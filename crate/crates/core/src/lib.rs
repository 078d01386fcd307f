//! Distributed gradient-based center clustering over connected user networks.
//!
//! Each user of a peer-to-peer network holds a local dataset and keeps its own
//! copy of the `K` cluster centers. One synchronous round reassigns every local
//! sample to its nearest local center, exchanges centers with graph neighbours,
//! and then moves each center along a consensus term (disagreement with
//! neighbours) plus a penalty-scaled local gradient term. The crate provides:
//!
//! * [`data`] — CSV ingestion and homogeneous/heterogeneous partitioning,
//! * [`network`] — connected topologies and the Laplacian spectral bound that
//!   caps the admissible step size,
//! * [`losses`] — the pluggable clustering-loss contract (squared Euclidean,
//!   Huber) and a numerical validator for its assumptions,
//! * [`engine`] — the iteration itself, objective evaluation, fixed-point
//!   certification and the centralized baseline,
//! * [`init`] — random, local K-means++ and collaborative (DKM+C)
//!   center initialization,
//! * [`harness`] — seeded multi-run experiments with CSV/JSON emission.

pub mod centers;
pub mod data;
pub mod engine;
pub mod error;
pub mod harness;
pub mod init;
pub mod losses;
pub mod metrics;
pub mod network;
pub mod seeding;

pub use centers::Centers;
pub use error::{Error, Result};
