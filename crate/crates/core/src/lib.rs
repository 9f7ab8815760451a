//! Cycle covers of sparse expanding graphs via the absorbing method.
//!
//! The pipeline certifies sparseness and expansion, splits a graph into
//! expanding parts, and covers each part with few cycles by combining an
//! approximate path cover, a path-connecting router and an absorber that can
//! swallow any balanced leftover set. Every cover is checked exactly before it
//! is returned.

pub mod absorber;
pub mod connect;
pub mod cover;
pub mod expander;
pub mod experiment;
pub mod graph;
pub mod partition;
pub mod randgen;
pub mod rng;
pub mod sparse;

pub use graph::{Graph, GraphError, VertexSet};
pub use rng::Seed;
