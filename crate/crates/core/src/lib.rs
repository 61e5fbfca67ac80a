//! Strategic classification on graphs with linear graph classifiers.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod constructions;
pub mod datasets;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod graph;
pub mod smooth;
pub mod train;

pub use error::{Error, Result};
pub use exact::{simulate_dynamics, DynamicsTrace, ResponseConfig};
pub use graph::{DirectedGraph, EmbeddingWeights, Labels, LinearGraphClassifier, NodeFeatures};
pub use smooth::{stacked_forward, SmoothConfig};
