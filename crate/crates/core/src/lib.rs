//! Planning reuse-aware execution of sensitivity-analysis workflow studies.
//!
//! Parameter sets are sampled from a grid, each set instantiates a replica of a stage/task
//! workflow, identical stage instances are collapsed into a compact graph, and the remaining
//! per-stage duplicate tasks are grouped into buckets that are cheap to execute together.

pub mod compact;
pub mod error;
pub mod examples;
pub mod merging;
pub mod num;
pub mod partition;
pub mod plan;
pub mod population;
pub mod reference;
pub mod replay;
pub mod reuse_tree;
pub mod sampling;
pub mod sim;
pub mod workflow;

pub use error::{Error, Result};
pub use num::Scalar;

/// Simulation types at double precision.
pub type CostModelF64 = sim::CostModel<f64>;
pub type SimResultF64 = sim::SimResult<f64>;
pub type ElementaryEffectF64 = sampling::ElementaryEffect<f64>;
