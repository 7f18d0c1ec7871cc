//! Traffic prediction over linkage networks.
//!
//! A road network (intersections + directed segments) is transformed into
//! its line graph, the linkage network, whose nodes are road segments and
//! whose edges are the physical turns traffic can take. A gated recurrent
//! cell propagates per-node hidden states along `A' = alpha*A + I` each
//! interval, shares every weight matrix across the graph, and predicts all
//! segments simultaneously; gradients are hand-derived truncated BPTT,
//! validated against a finite-difference oracle. An online loop trains the
//! model as observations arrive, predicting each interval before it learns
//! from it.

pub mod bench;
pub mod checkpoint;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod graph;
pub mod model;
pub mod online;
pub mod panel;
pub mod sim;

pub use error::{GrnnError, Result};
