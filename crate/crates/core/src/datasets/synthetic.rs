//! Synthetic road traffic.
//!
//! A latent density field evolves by neighbour diffusion plus a per-node
//! periodic inflow:
//!
//! ```text
//! d[t+1][v] = max(0, (1-α)·d[t][v] + α·mean(d[t][u] : u ~ v) + A·sin(2πt/P + φ_v))
//! ```
//!
//! Observed channels add independent Gaussian noise of width `σ` to the
//! latent state. Speed follows a linear speed-density law and occupancy is
//! density relative to jam density, clipped to `[0, 1]`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{TrafficDataset, CHANNEL_NAMES};
use crate::error::{Error, Result};
use crate::graph::{NeighborTable, RoadGraph};
use crate::numeric::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Grid,
    RandomGeometric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub num_nodes: usize,
    pub num_timesteps: usize,
    pub topology: Topology,
    /// α in `[0, 1)`.
    pub diffusion_rate: f64,
    /// Period of the inflow cycle, in timesteps.
    pub daily_period: usize,
    /// Observation noise σ.
    pub noise_std: f64,
    pub seed: u64,
    /// Inflow amplitude A.
    #[serde(default = "defaults::amplitude")]
    pub amplitude: f64,
    /// Connection radius for random geometric graphs on the unit square.
    /// Defaults to `sqrt(2 ln N / (π N))`.
    #[serde(default)]
    pub radius: Option<f64>,
    /// Initial densities are drawn uniformly from this range.
    #[serde(default = "defaults::initial_density")]
    pub initial_density: (f64, f64),
    #[serde(default = "defaults::jam_density")]
    pub jam_density: f64,
    #[serde(default = "defaults::free_flow_speed")]
    pub free_flow_speed: f64,
}

mod defaults {
    pub fn amplitude() -> f64 {
        1.0
    }
    pub fn initial_density() -> (f64, f64) {
        (20.0, 40.0)
    }
    pub fn jam_density() -> f64 {
        100.0
    }
    pub fn free_flow_speed() -> f64 {
        60.0
    }
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_nodes: 100,
            num_timesteps: 500,
            topology: Topology::RandomGeometric,
            diffusion_rate: 0.3,
            daily_period: 24,
            noise_std: 0.1,
            seed: 1,
            amplitude: defaults::amplitude(),
            radius: None,
            initial_density: defaults::initial_density(),
            jam_density: defaults::jam_density(),
            free_flow_speed: defaults::free_flow_speed(),
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.num_nodes == 0 {
            return bad("num_nodes must be positive".into());
        }
        if self.num_timesteps < 2 {
            return bad(format!("num_timesteps must be at least 2, got {}", self.num_timesteps));
        }
        if !(0.0..1.0).contains(&self.diffusion_rate) {
            return bad(format!(
                "diffusion_rate must be in [0, 1), got {}",
                self.diffusion_rate
            ));
        }
        if self.daily_period < 2 {
            return bad(format!("daily_period must be at least 2, got {}", self.daily_period));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return bad(format!("noise_std must be non-negative, got {}", self.noise_std));
        }
        if !self.amplitude.is_finite() || self.amplitude < 0.0 {
            return bad(format!("amplitude must be non-negative, got {}", self.amplitude));
        }
        if let Some(r) = self.radius {
            if !(r.is_finite() && r > 0.0) {
                return bad(format!("radius must be positive, got {r}"));
            }
        }
        let (lo, hi) = self.initial_density;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return bad(format!("initial_density range ({lo}, {hi}) is invalid"));
        }
        if !(self.jam_density.is_finite() && self.jam_density > 0.0) {
            return bad("jam_density must be positive".into());
        }
        if !(self.free_flow_speed.is_finite() && self.free_flow_speed > 0.0) {
            return bad("free_flow_speed must be positive".into());
        }
        Ok(())
    }
}

/// Rectangular lattice with `r` rows, where `r` is the largest divisor of `n`
/// not exceeding `sqrt(n)`. Prime `n` gives a path.
pub fn grid_graph(n: usize) -> Result<RoadGraph> {
    let rows = (1..=n)
        .take_while(|r| r * r <= n)
        .filter(|r| n.is_multiple_of(*r))
        .last()
        .unwrap_or(1);
    let cols = n / rows;
    let mut edges = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let v = i * cols + j;
            if j + 1 < cols {
                edges.push((v, v + 1));
            }
            if i + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    RoadGraph::new(n, edges)
}

/// Nodes uniform on the unit square, joined when closer than `radius`.
pub fn random_geometric_graph(n: usize, radius: f64, rng: &mut Rng) -> Result<RoadGraph> {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.next_f64(), rng.next_f64())).collect();
    let r2 = radius * radius;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let (dx, dy) = (pts[u].0 - pts[v].0, pts[u].1 - pts[v].1);
            if dx * dx + dy * dy < r2 {
                edges.push((u, v));
            }
        }
    }
    RoadGraph::new(n, edges)
}

fn default_radius(n: usize) -> f64 {
    let n = n.max(2) as f64;
    (2.0 * n.ln() / (PI * n)).sqrt()
}

/// `(1-α)·d_v + α·mean(d_u : u ~ v)`. An isolated node keeps its value.
pub fn diffusion_step(table: &NeighborTable, density: &[f64], alpha: f64) -> Vec<f64> {
    (0..density.len())
        .map(|v| {
            let nbrs = table.neighbors(v).expect("density has one entry per node");
            let mean = if nbrs.is_empty() {
                density[v]
            } else {
                nbrs.iter().map(|&u| density[u]).sum::<f64>() / nbrs.len() as f64
            };
            (1.0 - alpha) * density[v] + alpha * mean
        })
        .collect()
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<TrafficDataset> {
    cfg.validate()?;
    let mut rng = Rng::new(cfg.seed);
    let mut topo_rng = rng.fork(0);
    let graph = match cfg.topology {
        Topology::Grid => grid_graph(cfg.num_nodes)?,
        Topology::RandomGeometric => random_geometric_graph(
            cfg.num_nodes,
            cfg.radius.unwrap_or_else(|| default_radius(cfg.num_nodes)),
            &mut topo_rng,
        )?,
    };
    let mut init_rng = rng.fork(1);
    let (lo, hi) = cfg.initial_density;
    let initial: Vec<f64> = (0..cfg.num_nodes).map(|_| init_rng.uniform(lo, hi)).collect();
    generate_with_rng(cfg, graph, &initial, &mut rng)
}

/// Runs the generator on a given graph and initial latent density.
pub fn generate_on_graph(
    cfg: &SyntheticConfig,
    graph: RoadGraph,
    initial: &[f64],
) -> Result<TrafficDataset> {
    cfg.validate()?;
    let mut rng = Rng::new(cfg.seed);
    generate_with_rng(cfg, graph, initial, &mut rng)
}

fn generate_with_rng(
    cfg: &SyntheticConfig,
    graph: RoadGraph,
    initial: &[f64],
    rng: &mut Rng,
) -> Result<TrafficDataset> {
    let n = graph.num_nodes();
    if initial.len() != n {
        return Err(Error::Validation(format!(
            "initial density has {} entries for {n} nodes",
            initial.len()
        )));
    }
    if initial.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(Error::Validation("initial density must be finite and non-negative".into()));
    }
    let table = NeighborTable::from_graph(&graph);
    let mut phase_rng = rng.fork(2);
    let phases: Vec<f64> = (0..n).map(|_| phase_rng.uniform(0.0, 2.0 * PI)).collect();
    let mut noise = rng.fork(3);

    let steps = cfg.num_timesteps;
    let f = CHANNEL_NAMES.len();
    let mut features = Vec::with_capacity(steps * n * f);
    let mut targets = Vec::with_capacity(steps * n);
    let mut d = initial.to_vec();
    let sigma = cfg.noise_std;
    for t in 0..steps {
        for &latent in &d {
            let density = (latent + noise.normal(0.0, sigma)).max(0.0);
            let free = cfg.free_flow_speed * (1.0 - latent / cfg.jam_density);
            let speed = (free + noise.normal(0.0, sigma)).max(0.0);
            let occupancy = (latent / cfg.jam_density + noise.normal(0.0, sigma / cfg.jam_density))
                .clamp(0.0, 1.0);
            features.extend_from_slice(&[density, speed, occupancy]);
            targets.push(density);
        }
        if t + 1 < steps {
            let omega = 2.0 * PI * t as f64 / cfg.daily_period as f64;
            d = diffusion_step(&table, &d, cfg.diffusion_rate)
                .into_iter()
                .zip(&phases)
                .map(|(x, phi)| (x + cfg.amplitude * (omega + phi).sin()).max(0.0))
                .collect();
        }
    }
    TrafficDataset::new(
        graph,
        steps,
        features,
        targets,
        CHANNEL_NAMES.iter().map(|s| s.to_string()).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(topology: Topology, n: usize, steps: usize) -> SyntheticConfig {
        SyntheticConfig {
            num_nodes: n,
            num_timesteps: steps,
            topology,
            diffusion_rate: 0.0,
            daily_period: 24,
            noise_std: 0.0,
            seed: 3,
            amplitude: 0.0,
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn no_dynamics_means_constant_density() {
        let ds = generate_synthetic(&quiet(Topology::Grid, 6, 10)).unwrap();
        for t in 1..10 {
            assert_eq!(ds.targets_at(t), ds.targets_at(0));
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let cfg = SyntheticConfig {
            num_nodes: 15,
            num_timesteps: 30,
            ..SyntheticConfig::default()
        };
        assert_eq!(generate_synthetic(&cfg).unwrap(), generate_synthetic(&cfg).unwrap());
        let other = SyntheticConfig { seed: 2, ..cfg.clone() };
        assert_ne!(generate_synthetic(&cfg).unwrap(), generate_synthetic(&other).unwrap());
    }

    #[test]
    fn one_diffusion_step_by_hand() {
        let cfg = SyntheticConfig {
            diffusion_rate: 0.5,
            ..quiet(Topology::Grid, 2, 2)
        };
        let g = RoadGraph::new(2, vec![(0, 1)]).unwrap();
        let ds = generate_on_graph(&cfg, g, &[0.0, 10.0]).unwrap();
        assert_eq!(ds.targets_at(0), &[0.0, 10.0]);
        assert_eq!(ds.targets_at(1), &[5.0, 5.0]);
    }

    #[test]
    fn diffusion_conserves_mass_on_regular_graph() {
        // 5-cycle is 2-regular
        let g = RoadGraph::new(5, (0..5).map(|i| (i, (i + 1) % 5)).collect()).unwrap();
        let table = NeighborTable::from_graph(&g);
        let mut d = vec![3.0, 0.0, 7.5, 1.25, 9.0];
        let total: f64 = d.iter().sum();
        for _ in 0..50 {
            d = diffusion_step(&table, &d, 0.3);
            assert!((d.iter().sum::<f64>() - total).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        let base = SyntheticConfig::default();
        for cfg in [
            SyntheticConfig { diffusion_rate: 1.0, ..base.clone() },
            SyntheticConfig { diffusion_rate: -0.1, ..base.clone() },
            SyntheticConfig { daily_period: 1, ..base.clone() },
            SyntheticConfig { noise_std: -1.0, ..base.clone() },
            SyntheticConfig { num_timesteps: 1, ..base.clone() },
        ] {
            assert!(matches!(generate_synthetic(&cfg), Err(Error::Validation(_))));
        }
    }

    #[test]
    fn grid_edge_count() {
        let g = grid_graph(20).unwrap();
        assert_eq!(g.num_nodes(), 20);
        // 4x5 lattice: 4*4 horizontal + 3*5 vertical
        assert_eq!(g.edges().len(), 2 * 4 * 5 - 4 - 5);
        assert_eq!(grid_graph(7).unwrap().edges().len(), 6);
    }

    #[test]
    fn channels_respect_ranges() {
        let ds = generate_synthetic(&SyntheticConfig {
            num_nodes: 20,
            num_timesteps: 50,
            noise_std: 2.0,
            ..SyntheticConfig::default()
        })
        .unwrap();
        for t in 0..50 {
            for v in 0..20 {
                assert!(ds.feature(t, v, 0) >= 0.0);
                assert!(ds.feature(t, v, 1) >= 0.0);
                let occ = ds.feature(t, v, 2);
                assert!((0.0..=1.0).contains(&occ));
                assert_eq!(ds.feature(t, v, 0), ds.target(t, v));
            }
        }
    }
}
