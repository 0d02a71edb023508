//! Sparse dictionary learning for over-realized dictionaries.
//!
//! The crate covers the synthetic data process `y = A z + ε`, OMP and
//! exhaustive sparse decoders, the reconstruction and masked objectives with
//! their dictionary gradients, an Adam training loop for both objectives,
//! recovery/incoherence/RIP diagnostics, and constructive checks of the two
//! theoretical claims (noise overfitting of the reconstruction loss and
//! optimality of the ground truth under the masked loss).
//!
//! Everything here is `no_std` + `alloc`; file formats, sweeps and the CLI
//! live in the companion `maskdict-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod decoder;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod objectives;
pub mod rng;
pub(crate) mod subsets;
pub mod trainer;
pub mod verify;

pub use decoder::{Mask, OmpOptions, SparseVector};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use model::{Dataset, GroundTruthModel, Sample};
pub use rng::RngStream;
pub use trainer::{RunResult, TrainConfig};
