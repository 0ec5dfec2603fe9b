//! Resolution-parameterized modularity and Louvain community detection.

mod louvain;
mod partition;

pub use louvain::{LEVEL_TOLERANCE, MOVE_EPSILON};
pub use partition::Partition;

use crate::error::{AtlasError, Result};
use crate::graph::Graph;
use crate::rng::derive_seed;

/// A Louvain outcome at one resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityResult {
    pub gamma: f64,
    pub partition: Partition,
    /// Modularity of `partition` at `gamma`.
    pub modularity: f64,
}

impl CommunityResult {
    pub fn num_communities(&self) -> usize {
        self.partition.num_blocks()
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(AtlasError::InvalidParameter(format!(
            "resolution must be a positive finite number, got {gamma}"
        )))
    }
}

/// Modularity of `p` at resolution `gamma`:
/// `Q = Σ_c [ e_c / m − γ (d_c / 2m)² ]` with `e_c` the internal edge weight
/// and `d_c` the total strength of community `c`.
pub fn modularity(g: &Graph, p: &Partition, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if p.len() != g.num_nodes() {
        return Err(AtlasError::Shape(format!(
            "partition covers {} nodes, graph has {}",
            p.len(),
            g.num_nodes()
        )));
    }
    let m = g.total_weight();
    if m == 0.0 {
        return Err(AtlasError::Data(
            "modularity is undefined on a graph without edges".into(),
        ));
    }
    let k = p.num_blocks();
    let mut internal = vec![0.0; k];
    let mut degree = vec![0.0; k];
    for u in 0..g.num_nodes() {
        degree[p.block_of(u)] += g.strength(u);
    }
    for (u, v, w) in g.edges() {
        if p.block_of(u) == p.block_of(v) {
            internal[p.block_of(u)] += w;
        }
    }
    Ok(internal
        .iter()
        .zip(&degree)
        .map(|(&e, &d)| e / m - gamma * (d / (2.0 * m)).powi(2))
        .sum())
}

/// Seeded Louvain at resolution `gamma`. Identical inputs give an identical
/// partition. Graphs without edges return the singleton partition with Q = 0.
pub fn louvain(g: &Graph, gamma: f64, seed: u64) -> Result<CommunityResult> {
    check_gamma(gamma)?;
    if g.num_nodes() == 0 {
        return Err(AtlasError::Data("louvain needs at least one node".into()));
    }
    let assign = louvain::louvain_assignment(g, gamma, seed);
    let partition = Partition::from_labels(&assign);
    let q = if g.num_edges() == 0 {
        0.0
    } else {
        modularity(g, &partition, gamma)?
    };
    Ok(CommunityResult {
        gamma,
        partition,
        modularity: q,
    })
}

/// Runs `restarts` independently seeded passes and keeps the best modularity
/// (earliest on ties). `restarts == 1` is exactly [`louvain`].
pub fn louvain_best_of(g: &Graph, gamma: f64, seed: u64, restarts: usize) -> Result<CommunityResult> {
    let mut best = louvain(g, gamma, seed)?;
    for r in 1..restarts {
        let next = louvain(g, gamma, derive_seed(seed, r as u64))?;
        if next.modularity > best.modularity {
            best = next;
        }
    }
    Ok(best)
}
