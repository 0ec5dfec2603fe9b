//! Two-phase Louvain optimization of resolution-weighted modularity.
//!
//! Phase one moves single nodes to the neighboring community with the best
//! gain until a full sweep makes no move; phase two collapses communities
//! into weighted meta-nodes (internal weight kept as a self-loop) and repeats.
//! After the hierarchy converges the flattened partition is polished with
//! node-level sweeps on the input graph, and re-aggregated if any node moved,
//! so the returned partition is a local-move fixpoint of the original graph.

use crate::graph::Graph;
use crate::rng::{permutation, rng_from_seed, Rng};

/// Minimum gain (in units of edge weight) for a node move to count.
pub const MOVE_EPSILON: f64 = 1e-12;

/// Aggregation stops once a level improves modularity by less than this.
pub const LEVEL_TOLERANCE: f64 = 1e-9;

const MAX_ROUNDS: usize = 1000;

/// Weighted CSR graph used at every aggregation level.
#[derive(Debug, Clone)]
pub(crate) struct LevelGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    self_loops: Vec<f64>,
    strength: Vec<f64>,
    two_m: f64,
}

impl LevelGraph {
    pub(crate) fn from_graph(g: &Graph) -> Self {
        let n = g.num_nodes();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        for u in 0..n {
            targets.extend_from_slice(g.neighbors(u));
            weights.extend_from_slice(g.neighbor_weights(u));
            offsets.push(targets.len());
        }
        let strength: Vec<f64> = (0..n).map(|u| g.strength(u)).collect();
        let two_m = strength.iter().sum();
        LevelGraph {
            offsets,
            targets,
            weights,
            self_loops: vec![0.0; n],
            strength,
            two_m,
        }
    }

    fn len(&self) -> usize {
        self.strength.len()
    }

    fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[u]..self.offsets[u + 1];
        self.targets[r.clone()]
            .iter()
            .zip(&self.weights[r])
            .map(|(&v, &w)| (v as usize, w))
    }

    /// Collapses each community of `comm` (ids `0..k`, contiguous) into a node.
    fn aggregate(&self, comm: &[u32], k: usize) -> LevelGraph {
        let mut self_loops = vec![0.0; k];
        let mut cross: Vec<(u32, u32, f64)> = Vec::new();
        for u in 0..self.len() {
            let cu = comm[u];
            self_loops[cu as usize] += self.self_loops[u];
            for (v, w) in self.neighbors(u) {
                let cv = comm[v];
                if cu == cv {
                    // Seen from both endpoints.
                    self_loops[cu as usize] += w / 2.0;
                } else {
                    cross.push((cu, cv, w));
                }
            }
        }
        cross.sort_unstable_by_key(|&(a, b, _)| (a, b));
        let mut offsets = vec![0usize; k + 1];
        let mut targets = Vec::with_capacity(cross.len());
        let mut weights = Vec::with_capacity(cross.len());
        let mut i = 0;
        while i < cross.len() {
            let (a, b, mut w) = cross[i];
            i += 1;
            while i < cross.len() && cross[i].0 == a && cross[i].1 == b {
                w += cross[i].2;
                i += 1;
            }
            targets.push(b);
            weights.push(w);
            offsets[a as usize + 1] += 1;
        }
        for c in 0..k {
            offsets[c + 1] += offsets[c];
        }
        let mut strength = self_loops.iter().map(|&s| 2.0 * s).collect::<Vec<_>>();
        for c in 0..k {
            strength[c] += weights[offsets[c]..offsets[c + 1]].iter().sum::<f64>();
        }
        LevelGraph {
            offsets,
            targets,
            weights,
            self_loops,
            strength,
            two_m: self.two_m,
        }
    }

    /// Modularity of the partition `comm` of this level's nodes.
    fn modularity(&self, comm: &[u32], k: usize, gamma: f64) -> f64 {
        if self.two_m == 0.0 {
            return 0.0;
        }
        let m = self.two_m / 2.0;
        let mut internal = vec![0.0; k];
        let mut total = vec![0.0; k];
        for u in 0..self.len() {
            let c = comm[u] as usize;
            total[c] += self.strength[u];
            internal[c] += self.self_loops[u];
            for (v, w) in self.neighbors(u) {
                if comm[v] as usize == c {
                    internal[c] += w / 2.0;
                }
            }
        }
        internal
            .iter()
            .zip(&total)
            .map(|(&e, &d)| e / m - gamma * (d / self.two_m).powi(2))
            .sum()
    }

    /// Node-level sweeps in `order` until a full sweep moves nothing.
    /// Returns the total number of moves.
    fn local_move(&self, comm: &mut [u32], order: &[usize], gamma: f64) -> usize {
        let n = self.len();
        if self.two_m == 0.0 {
            return 0;
        }
        let mut total = vec![0.0; n];
        for u in 0..n {
            total[comm[u] as usize] += self.strength[u];
        }
        let mut link = vec![0.0; n];
        let mut touched = vec![false; n];
        let mut seen: Vec<u32> = Vec::new();
        let scale = gamma / self.two_m;
        let mut moves = 0;
        loop {
            let mut moved = 0;
            for &u in order {
                let ku = self.strength[u];
                let home = comm[u];
                for (v, w) in self.neighbors(u) {
                    if v == u {
                        continue;
                    }
                    let c = comm[v];
                    if !touched[c as usize] {
                        touched[c as usize] = true;
                        seen.push(c);
                    }
                    link[c as usize] += w;
                }
                total[home as usize] -= ku;
                let stay = link[home as usize] - scale * total[home as usize] * ku;
                let mut best: Option<(u32, f64)> = None;
                for &c in &seen {
                    if c == home {
                        continue;
                    }
                    let gain = link[c as usize] - scale * total[c as usize] * ku;
                    best = match best {
                        Some((bc, bg)) if gain < bg || (gain == bg && c > bc) => Some((bc, bg)),
                        _ => Some((c, gain)),
                    };
                }
                let target = match best {
                    Some((c, gain)) if gain > stay + MOVE_EPSILON => c,
                    _ => home,
                };
                total[target as usize] += ku;
                if target != home {
                    comm[u] = target;
                    moved += 1;
                }
                for &c in &seen {
                    link[c as usize] = 0.0;
                    touched[c as usize] = false;
                }
                seen.clear();
            }
            if moved == 0 {
                break;
            }
            moves += moved;
        }
        moves
    }
}

/// Renumbers `comm` to contiguous ids in node order; returns the block count.
fn renumber(comm: &mut [u32]) -> usize {
    let mut map = vec![u32::MAX; comm.len().max(1)];
    let mut next = 0u32;
    for c in comm.iter_mut() {
        let slot = &mut map[*c as usize];
        if *slot == u32::MAX {
            *slot = next;
            next += 1;
        }
        *c = *slot;
    }
    next as usize
}

/// Runs seeded Louvain and returns the flat assignment of original nodes.
pub(crate) fn louvain_assignment(g: &Graph, gamma: f64, seed: u64) -> Vec<u32> {
    let base = LevelGraph::from_graph(g);
    let n = base.len();
    let mut rng: Rng = rng_from_seed(seed);
    let mut assign: Vec<u32> = (0..n as u32).collect();

    for round in 0..MAX_ROUNDS {
        let order = permutation(n, &mut rng);
        let moved = base.local_move(&mut assign, &order, gamma);
        if round > 0 && moved == 0 {
            break;
        }
        let mut k = renumber(&mut assign);
        let mut level = base.aggregate(&assign, k);
        let mut q_prev = base.modularity(&assign, k, gamma);
        loop {
            let mut comm: Vec<u32> = (0..k as u32).collect();
            let order = permutation(k, &mut rng);
            if level.local_move(&mut comm, &order, gamma) == 0 {
                break;
            }
            let k_next = renumber(&mut comm);
            for a in assign.iter_mut() {
                *a = comm[*a as usize];
            }
            level = level.aggregate(&comm, k_next);
            k = k_next;
            let q = base.modularity(&assign, k, gamma);
            if q - q_prev < LEVEL_TOLERANCE {
                break;
            }
            q_prev = q;
        }
    }
    assign
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    #[test]
    fn aggregation_preserves_total_weight() {
        let mut b = GraphBuilder::new(5);
        for (u, v) in [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)] {
            b.add_edge(u, v).unwrap();
        }
        let level = LevelGraph::from_graph(&b.build());
        let comm = vec![0, 0, 1, 1, 2];
        let agg = level.aggregate(&comm, 3);
        let s: f64 = agg.strength.iter().sum();
        assert!((s - level.two_m).abs() < 1e-12);
        assert!((agg.modularity(&[0, 1, 2], 3, 1.0) - level.modularity(&comm, 3, 1.0)).abs() < 1e-12);
        assert_eq!(agg.self_loops, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn renumber_is_first_occurrence() {
        let mut c = vec![4, 4, 1, 0, 1];
        assert_eq!(renumber(&mut c), 3);
        assert_eq!(c, vec![0, 0, 1, 2, 1]);
    }
}
