//! Finding a user's favourite tuple on a data stream with few pairwise
//! comparisons.
//!
//! The user's preference is an unknown linear utility `u·x`. The user can
//! only answer "which of these two do you prefer?". [`engine::Engine`] reads
//! the data in one random-order pass, builds pruning [`filters`] from small
//! sorted samples, and returns a tuple whose regret is at most `ε / u·x*`.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below are the double-precision instantiations used by the
//! command-line tools.

// `!(x >= 0.0)` is how validation rejects NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod engine;
pub mod error;
pub mod filters;
pub mod model;
pub mod scalar;
pub mod solvers;
pub mod tournament;

pub use engine::{
    rand_baseline, run_stream, Disposition, Engine, EngineConfig, EngineStats, RunResult, Step,
};
pub use error::{Error, Result};
pub use filters::{Filter, FilterKind, FilterParams, Query};
pub use model::{
    max_similar_subset_size, normalize_dataset, ComparisonOutcome, Dataset, Oracle, SimOracle,
    Tuple,
};
pub use scalar::Scalar;

pub type Tuple64 = model::Tuple<f64>;
pub type Dataset64 = model::Dataset<f64>;
pub type SimOracle64 = model::SimOracle<f64>;
pub type Engine64 = engine::Engine<f64>;
pub type Filter64 = filters::Filter<f64>;
pub type RunResult64 = engine::RunResult<f64>;

pub type Tuple32 = model::Tuple<f32>;
pub type Dataset32 = model::Dataset<f32>;
pub type SimOracle32 = model::SimOracle<f32>;
pub type Engine32 = engine::Engine<f32>;
