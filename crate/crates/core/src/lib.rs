//! Graph neural networks for node-level traffic density forecasting.
//!
//! Three architectures share one regression head and one training loop:
//!
//! * GCN: stacked `ReLU(Â·H·W + b)` layers over the symmetric renormalised adjacency.
//! * GraphSAGE: sampled mean aggregation concatenated with the node's own state.
//! * GGNN: GRU-gated recurrent propagation over summed neighbour messages.
//!
//! Everything is dense `f64` with hand-written backward passes checked
//! against finite differences.

pub mod datasets;
pub mod error;
pub mod graph;
pub mod models;
pub mod numeric;
pub mod training;

pub use error::{Error, Result};
pub use graph::{GraphContext, RoadGraph};
pub use models::{Model, ModelSpec};
pub use numeric::{Matrix, Rng};
