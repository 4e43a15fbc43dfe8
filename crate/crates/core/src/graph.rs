//! Road-network graphs: validated edge lists, dense adjacency, the symmetric
//! renormalised propagation matrix, and neighbour sampling.
//!
//! Graphs are undirected and unweighted. Self-loops never appear in the edge
//! list; [`symmetric_normalize`] adds them when forming `D̃^-1/2 (A + I) D̃^-1/2`.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{Matrix, Rng};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoadGraph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    node_ids: Option<Vec<String>>,
}

impl RoadGraph {
    pub fn new(num_nodes: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        Self::with_ids(num_nodes, edges, None)
    }

    pub fn with_ids(
        num_nodes: usize,
        edges: Vec<(usize, usize)>,
        node_ids: Option<Vec<String>>,
    ) -> Result<Self> {
        let g = Self {
            num_nodes,
            edges,
            node_ids,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_nodes == 0 {
            return Err(Error::Validation("graph must have at least one node".into()));
        }
        let mut seen = BTreeSet::new();
        for &(u, v) in &self.edges {
            if u >= self.num_nodes || v >= self.num_nodes {
                return Err(Error::Validation(format!(
                    "edge ({u}, {v}) has an endpoint outside 0..{}",
                    self.num_nodes
                )));
            }
            if u == v {
                return Err(Error::Validation(format!("edge ({u}, {v}) is a self-loop")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::Validation(format!("edge ({u}, {v}) is duplicated")));
            }
        }
        if let Some(ids) = &self.node_ids {
            if ids.len() != self.num_nodes {
                return Err(Error::Validation(format!(
                    "node_ids has {} labels for {} nodes",
                    ids.len(),
                    self.num_nodes
                )));
            }
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_ids(&self) -> Option<&[String]> {
        self.node_ids.as_deref()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let g: RoadGraph = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<graph json>".into(),
            reason: e.to_string(),
        })?;
        g.validate()?;
        Ok(g)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialisation cannot fail")
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Parse { reason, .. } => Error::Parse {
                path: path.display().to_string(),
                reason,
            },
            other => other,
        })
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }
}

/// `N x N` binary symmetric adjacency with zero diagonal.
pub fn build_adjacency(g: &RoadGraph) -> Result<Matrix> {
    g.validate()?;
    let n = g.num_nodes();
    let mut a = Matrix::zeros(n, n);
    for &(u, v) in g.edges() {
        a.set(u, v, 1.0);
        a.set(v, u, 1.0);
    }
    Ok(a)
}

/// The GCN propagation operator `Â = D̃^-1/2 (A + I) D̃^-1/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedAdjacency(Matrix);

impl NormalizedAdjacency {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }
}

pub fn symmetric_normalize(a: &Matrix) -> Result<NormalizedAdjacency> {
    let (n, m) = a.shape();
    if n != m {
        return Err(Error::Validation(format!(
            "adjacency must be square, got {n}x{m}"
        )));
    }
    for i in 0..n {
        if a.get(i, i) != 0.0 {
            return Err(Error::Validation(format!(
                "adjacency has a non-zero diagonal entry at ({i}, {i})"
            )));
        }
        for j in 0..n {
            let x = a.get(i, j);
            if x != 0.0 && x != 1.0 {
                return Err(Error::Validation(format!(
                    "adjacency entry ({i}, {j}) = {x} is not binary"
                )));
            }
            if x != a.get(j, i) {
                return Err(Error::Validation(format!(
                    "adjacency is asymmetric at ({i}, {j})"
                )));
            }
        }
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let deg = 1.0 + a.row(i).iter().sum::<f64>();
            1.0 / deg.sqrt()
        })
        .collect();
    let hat = Matrix::from_fn(n, n, |i, j| {
        let aij = if i == j { 1.0 } else { a.get(i, j) };
        inv_sqrt[i] * aij * inv_sqrt[j]
    });
    Ok(NormalizedAdjacency(hat))
}

/// Sorted neighbour lists, one per node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborTable {
    neighbors: Vec<Vec<usize>>,
}

impl NeighborTable {
    pub fn from_graph(g: &RoadGraph) -> Self {
        let mut neighbors = vec![Vec::new(); g.num_nodes()];
        for &(u, v) in g.edges() {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Self { neighbors }
    }

    pub fn num_nodes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, node: usize) -> Result<&[usize]> {
        self.neighbors
            .get(node)
            .map(Vec::as_slice)
            .ok_or(Error::Index {
                index: node,
                len: self.neighbors.len(),
            })
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Full neighbourhood when `degree <= fanout`, otherwise `fanout` neighbours
/// drawn uniformly without replacement. Output is sorted.
pub fn sample_neighbors(
    table: &NeighborTable,
    node: usize,
    fanout: usize,
    rng: &mut Rng,
) -> Result<Vec<usize>> {
    let nbrs = table.neighbors(node)?;
    if nbrs.len() <= fanout {
        return Ok(nbrs.to_vec());
    }
    let mut picked: Vec<usize> = rng
        .sample_indices(nbrs.len(), fanout)
        .into_iter()
        .map(|i| nbrs[i])
        .collect();
    picked.sort_unstable();
    Ok(picked)
}

/// Relabels nodes so that old node `i` becomes `perm[i]`.
pub fn permute_graph(g: &RoadGraph, perm: &[usize]) -> Result<RoadGraph> {
    check_permutation(perm, g.num_nodes())?;
    let edges = g.edges().iter().map(|&(u, v)| (perm[u], perm[v])).collect();
    let node_ids = g.node_ids().map(|ids| {
        let mut out = vec![String::new(); ids.len()];
        for (i, id) in ids.iter().enumerate() {
            out[perm[i]] = id.clone();
        }
        out
    });
    RoadGraph::with_ids(g.num_nodes(), edges, node_ids)
}

/// Moves row `i` of `x` to row `perm[i]` (the product `P·X`).
pub fn permute_rows(x: &Matrix, perm: &[usize]) -> Result<Matrix> {
    check_permutation(perm, x.rows())?;
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for (i, &p) in perm.iter().enumerate() {
        out.row_mut(p).copy_from_slice(x.row(i));
    }
    Ok(out)
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::Validation(format!(
            "permutation has length {}, expected {n}",
            perm.len()
        )));
    }
    let mut hit = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut hit[p], true) {
            return Err(Error::Validation(format!(
                "{perm:?} is not a bijection on 0..{n}"
            )));
        }
    }
    Ok(())
}

/// Everything a model needs to know about the topology, precomputed once.
#[derive(Clone, Debug)]
pub struct GraphContext {
    pub adjacency: Matrix,
    pub normalized: NormalizedAdjacency,
    pub neighbors: NeighborTable,
}

impl GraphContext {
    pub fn new(g: &RoadGraph) -> Result<Self> {
        let adjacency = build_adjacency(g)?;
        let normalized = symmetric_normalize(&adjacency)?;
        Ok(Self {
            adjacency,
            normalized,
            neighbors: NeighborTable::from_graph(g),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.rows()
    }
}
