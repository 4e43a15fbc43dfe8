//! Traffic time series on a road graph: generation, ingestion, windowing,
//! chronological splitting and feature normalisation.

mod io;
mod normalize;
mod split;
mod synthetic;
mod window;

pub use io::{features_csv, load_dataset, load_dataset_from_str, write_dataset, FEATURES_HEADER};
pub use normalize::{fit_normalizer, fit_target_scale, Normalizer};
pub use split::{split, split_sizes, SplitSpec, Splits};
pub use synthetic::{
    diffusion_step, generate_on_graph, generate_synthetic, grid_graph, random_geometric_graph,
    SyntheticConfig, Topology,
};
pub use window::{make_windows, WindowedSample};

use crate::error::{Error, Result};
use crate::graph::RoadGraph;

pub const CHANNEL_NAMES: [&str; 3] = ["density", "speed", "occupancy"];

/// Per-node feature series and next-step density targets.
///
/// `features` is `[T][N][F]` flattened row-major; `targets` is `[T][N]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrafficDataset {
    graph: RoadGraph,
    num_timesteps: usize,
    features: Vec<f64>,
    targets: Vec<f64>,
    channel_names: Vec<String>,
}

impl TrafficDataset {
    pub fn new(
        graph: RoadGraph,
        num_timesteps: usize,
        features: Vec<f64>,
        targets: Vec<f64>,
        channel_names: Vec<String>,
    ) -> Result<Self> {
        let n = graph.num_nodes();
        let f = channel_names.len();
        if num_timesteps < 2 {
            return Err(Error::Validation(format!(
                "dataset needs at least 2 timesteps, got {num_timesteps}"
            )));
        }
        if f == 0 {
            return Err(Error::Validation("dataset needs at least one channel".into()));
        }
        if features.len() != num_timesteps * n * f {
            return Err(Error::Validation(format!(
                "features hold {} values, expected {num_timesteps}x{n}x{f}",
                features.len()
            )));
        }
        if targets.len() != num_timesteps * n {
            return Err(Error::Validation(format!(
                "targets hold {} values, expected {num_timesteps}x{n}",
                targets.len()
            )));
        }
        if let Some(i) = features.iter().position(|x| !x.is_finite()) {
            let (t, rest) = (i / (n * f), i % (n * f));
            return Err(Error::Validation(format!(
                "non-finite feature at t={t}, node={}, channel={}",
                rest / f,
                rest % f
            )));
        }
        if let Some(i) = targets.iter().position(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Validation(format!(
                "target at t={}, node={} is {} (must be finite and non-negative)",
                i / n,
                i % n,
                targets[i]
            )));
        }
        Ok(Self {
            graph,
            num_timesteps,
            features,
            targets,
            channel_names,
        })
    }

    pub fn graph(&self) -> &RoadGraph {
        &self.graph
    }

    pub fn num_timesteps(&self) -> usize {
        self.num_timesteps
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    #[inline]
    pub fn feature(&self, t: usize, node: usize, channel: usize) -> f64 {
        let (n, f) = (self.num_nodes(), self.num_channels());
        self.features[(t * n + node) * f + channel]
    }

    #[inline]
    pub fn target(&self, t: usize, node: usize) -> f64 {
        self.targets[t * self.num_nodes() + node]
    }

    /// Features of one timestep, `N` rows of `F` values.
    pub fn features_at(&self, t: usize) -> &[f64] {
        let stride = self.num_nodes() * self.num_channels();
        &self.features[t * stride..(t + 1) * stride]
    }

    pub fn targets_at(&self, t: usize) -> &[f64] {
        let n = self.num_nodes();
        &self.targets[t * n..(t + 1) * n]
    }
}
