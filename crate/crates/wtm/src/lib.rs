//! Clause-based classifiers built from teams of two-action learning
//! automata, with optional real-valued clause weighting and a fast
//! binomial-uniform sampler for the stochastic feedback masks.
//!
//! The pieces, bottom up:
//!
//! - [`rng`]: seedable, splittable xoshiro256++ generator with draw
//!   counting.
//! - [`sampling`]: exact binomial draws and the two feedback-mask
//!   generators (Bernoulli reference and binomial-uniform fast path).
//! - [`automata`]: automaton state transitions and conjunctive clauses.
//! - [`feedback`]: Type I / Type II feedback application to one clause.
//! - [`machine`]: binary and multiclass machines, training loop, weight
//!   learning and statistics.
//! - [`data`]: bit-packed datasets, the WTMD container, IDX and board
//!   encoders, deterministic splits.
//! - [`model`]: the WTMM model container with payload checksum.
//!
//! Training is deterministic: seed, hyperparameters and data order fully
//! determine the resulting model on every platform.

pub mod automata;
pub mod bits;
pub mod data;
pub mod error;
pub mod feedback;
pub mod machine;
pub mod model;
pub mod rng;
pub mod sampling;

pub use automata::{Action, Clause, EvalMode};
pub use bits::BitVec;
pub use data::{BinaryDataset, DatasetFormat};
pub use error::{Error, ParseError, Result};
pub use feedback::FeedbackKind;
pub use machine::{
    BinaryWtm, EpochMetrics, MulticlassWtm, NegativeSampling, TrainOptions, WeightStats, WtmParams,
};
pub use model::StoredModel;
pub use rng::RngState;
pub use sampling::{FeedbackMask, MaskSampler};
