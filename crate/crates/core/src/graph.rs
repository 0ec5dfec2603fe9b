//! Immutable undirected graph with node features, labels and split masks.
//!
//! Adjacency is stored in compressed sparse row form with both directions of
//! every undirected edge present, so `neighbors(u)` is a contiguous slice.
//! Self-loops and duplicate edges are removed by [`GraphBuilder`].

use ndarray::Array2;

use crate::error::{AtlasError, Result};

/// Which split a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
    None,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            "none" => Some(Split::None),
            _ => None,
        }
    }
}

/// Per-node split assignment. Disjointness of the three masks holds by
/// construction since every node carries exactly one tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Masks {
    splits: Vec<Split>,
}

impl Masks {
    pub fn new(splits: Vec<Split>) -> Self {
        Masks { splits }
    }

    pub fn len(&self) -> usize {
        self.splits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splits.is_empty()
    }

    pub fn split(&self, node: usize) -> Split {
        self.splits[node]
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    /// Node ids carrying `which`, in ascending order.
    pub fn nodes(&self, which: Split) -> Vec<usize> {
        self.splits
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == which)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn count(&self, which: Split) -> usize {
        self.splits.iter().filter(|&&s| s == which).count()
    }
}

/// Counters reported while normalizing a raw edge list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeStats {
    /// Edge records seen in the input.
    pub raw_edges: usize,
    pub self_loops_dropped: usize,
    /// Repeated or reversed copies of an edge already present.
    pub duplicates_dropped: usize,
}

#[derive(Debug, Clone)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    features: Array2<f64>,
    labels: Option<Vec<u32>>,
    num_classes: usize,
    masks: Option<Masks>,
    edge_stats: EdgeStats,
}

impl Graph {
    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn neighbor_weights(&self, u: usize) -> &[f64] {
        &self.weights[self.offsets[u]..self.offsets[u + 1]]
    }

    /// Number of incident edges.
    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Sum of incident edge weights.
    pub fn strength(&self, u: usize) -> f64 {
        self.neighbor_weights(u).iter().sum()
    }

    /// Sum of all undirected edge weights (`m` in the weighted sense).
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum::<f64>() / 2.0
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.iter().any(|&w| w != 1.0)
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .zip(self.neighbor_weights(u))
                .filter(move |(&v, _)| (v as usize) > u)
                .map(move |(&v, &w)| (u, v as usize, w))
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    /// Number of classes, `max(label) + 1`; zero when unlabeled.
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn masks(&self) -> Option<&Masks> {
        self.masks.as_ref()
    }

    pub fn edge_stats(&self) -> EdgeStats {
        self.edge_stats
    }

    /// Returns a copy with the given labels, replacing any existing ones.
    pub fn with_labels(mut self, labels: Vec<u32>) -> Result<Self> {
        check_labels(self.num_nodes(), &labels)?;
        self.num_classes = labels.iter().max().map_or(0, |&m| m as usize + 1);
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_masks(mut self, masks: Masks) -> Result<Self> {
        if masks.len() != self.num_nodes() {
            return Err(AtlasError::Data(format!(
                "mask count {} does not match node count {}",
                masks.len(),
                self.num_nodes()
            )));
        }
        self.masks = Some(masks);
        Ok(self)
    }

    pub fn with_features(mut self, features: Array2<f64>) -> Result<Self> {
        if features.nrows() != self.num_nodes() {
            return Err(AtlasError::Data(format!(
                "feature row count {} does not match node count {}",
                features.nrows(),
                self.num_nodes()
            )));
        }
        self.features = features;
        Ok(self)
    }
}

fn check_labels(n: usize, labels: &[u32]) -> Result<()> {
    if labels.len() != n {
        return Err(AtlasError::Data(format!(
            "label count {} does not match node count {}",
            labels.len(),
            n
        )));
    }
    Ok(())
}

/// Collects raw edges and produces a normalized [`Graph`].
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    n: usize,
    edges: Vec<(u32, u32, f64)>,
    stats: EdgeStats,
}

impl GraphBuilder {
    pub fn new(n: usize) -> Self {
        GraphBuilder {
            n,
            edges: Vec::new(),
            stats: EdgeStats::default(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        self.add_weighted_edge(u, v, 1.0)
    }

    pub fn add_weighted_edge(&mut self, u: usize, v: usize, w: f64) -> Result<()> {
        if u >= self.n || v >= self.n {
            return Err(AtlasError::Data(format!(
                "edge ({u}, {v}) references a node outside 0..{}",
                self.n
            )));
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(AtlasError::Data(format!(
                "edge ({u}, {v}) has non-positive or non-finite weight {w}"
            )));
        }
        self.stats.raw_edges += 1;
        if u == v {
            self.stats.self_loops_dropped += 1;
            return Ok(());
        }
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        self.edges.push((a as u32, b as u32, w));
        Ok(())
    }

    /// Builds the graph with zero-width features.
    pub fn build(self) -> Graph {
        let n = self.n;
        self.build_with_features(Array2::zeros((n, 0)))
            .expect("zero-width features always match")
    }

    pub fn build_with_features(mut self, features: Array2<f64>) -> Result<Graph> {
        if features.nrows() != self.n {
            return Err(AtlasError::Data(format!(
                "feature row count {} does not match node count {}",
                features.nrows(),
                self.n
            )));
        }
        // Stable sort keeps the first-seen weight for duplicated pairs.
        self.edges.sort_by_key(|&(a, b, _)| (a, b));
        let before = self.edges.len();
        self.edges.dedup_by_key(|e| (e.0, e.1));
        self.stats.duplicates_dropped = before - self.edges.len();

        let n = self.n;
        let mut degree = vec![0usize; n];
        for &(a, b, _) in &self.edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut targets = vec![0u32; offsets[n]];
        let mut weights = vec![0.0; offsets[n]];
        for &(a, b, w) in &self.edges {
            let (a, b) = (a as usize, b as usize);
            targets[fill[a]] = b as u32;
            weights[fill[a]] = w;
            fill[a] += 1;
            targets[fill[b]] = a as u32;
            weights[fill[b]] = w;
            fill[b] += 1;
        }
        // Edges were sorted by (min, max), so each row still needs sorting.
        for u in 0..n {
            let (s, e) = (offsets[u], offsets[u + 1]);
            let mut row: Vec<(u32, f64)> = targets[s..e]
                .iter()
                .copied()
                .zip(weights[s..e].iter().copied())
                .collect();
            row.sort_by_key(|&(t, _)| t);
            for (k, (t, w)) in row.into_iter().enumerate() {
                targets[s + k] = t;
                weights[s + k] = w;
            }
        }

        Ok(Graph {
            offsets,
            targets,
            weights,
            features,
            labels: None,
            num_classes: 0,
            masks: None,
            edge_stats: self.stats,
        })
    }
}

/// Fraction of undirected edges whose endpoints share a label.
pub fn edge_homophily(g: &Graph) -> Result<f64> {
    let labels = g
        .labels()
        .ok_or_else(|| AtlasError::Data("edge homophily needs node labels".into()))?;
    let m = g.num_edges();
    if m == 0 {
        return Err(AtlasError::Data(
            "edge homophily is undefined on a graph without edges".into(),
        ));
    }
    let same = g.edges().filter(|&(u, v, _)| labels[u] == labels[v]).count();
    Ok(same as f64 / m as f64)
}

/// Weighted mean of neighbor feature rows; isolated nodes get the zero row.
pub fn neighbor_mean_features(g: &Graph) -> Array2<f64> {
    neighbor_mean(g, g.features())
}

/// Applies one step of mean aggregation to an arbitrary `n × d` matrix.
pub fn neighbor_mean(g: &Graph, x: &Array2<f64>) -> Array2<f64> {
    let n = g.num_nodes();
    let mut out = Array2::zeros((n, x.ncols()));
    for u in 0..n {
        let total = g.strength(u);
        if total == 0.0 {
            continue;
        }
        let mut row = out.row_mut(u);
        for (&v, &w) in g.neighbors(u).iter().zip(g.neighbor_weights(u)) {
            row.scaled_add(w / total, &x.row(v as usize));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn two_triangles_bridged() -> Graph {
        let mut b = GraphBuilder::new(6);
        for (u, v) in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)] {
            b.add_edge(u, v).unwrap();
        }
        b.build()
    }

    #[test]
    fn triangle_degrees() {
        let mut b = GraphBuilder::new(3);
        b.add_edge(0, 1).unwrap();
        b.add_edge(1, 2).unwrap();
        b.add_edge(0, 2).unwrap();
        let g = b.build_with_features(Array2::zeros((3, 2))).unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.num_edges(), 3);
        assert_eq!((0..3).map(|u| g.degree(u)).collect::<Vec<_>>(), vec![2, 2, 2]);
        assert_eq!(g.feature_dim(), 2);
    }

    #[test]
    fn reversed_edge_is_deduplicated() {
        let mut b = GraphBuilder::new(2);
        b.add_edge(0, 1).unwrap();
        b.add_edge(1, 0).unwrap();
        let g = b.build();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.edge_stats().duplicates_dropped, 1);
        assert_eq!(g.edge_stats().raw_edges, 2);
    }

    #[test]
    fn self_loops_are_dropped_and_counted() {
        let mut b = GraphBuilder::new(2);
        b.add_edge(0, 0).unwrap();
        b.add_edge(0, 1).unwrap();
        let g = b.build();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.edge_stats().self_loops_dropped, 1);
        assert_eq!(g.neighbors(0), &[1]);
    }

    #[test]
    fn out_of_range_and_bad_weight_rejected() {
        let mut b = GraphBuilder::new(2);
        assert!(b.add_edge(0, 2).is_err());
        assert!(b.add_weighted_edge(0, 1, 0.0).is_err());
        assert!(b.add_weighted_edge(0, 1, f64::NAN).is_err());
    }

    #[test]
    fn homophily_two_triangles() {
        let g = two_triangles_bridged().with_labels(vec![0, 0, 0, 1, 1, 1]).unwrap();
        assert!((edge_homophily(&g).unwrap() - 6.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn homophily_single_label_and_errors() {
        let g = two_triangles_bridged();
        assert!(edge_homophily(&g).is_err());
        let g = g.with_labels(vec![3; 6]).unwrap();
        assert_eq!(edge_homophily(&g).unwrap(), 1.0);
        let empty = GraphBuilder::new(2).build().with_labels(vec![0, 1]).unwrap();
        assert!(edge_homophily(&empty).is_err());
    }

    #[test]
    fn neighbor_mean_on_path() {
        let mut b = GraphBuilder::new(4);
        b.add_edge(0, 1).unwrap();
        b.add_edge(1, 2).unwrap();
        let g = b.build_with_features(array![[1.0], [2.0], [3.0], [9.0]]).unwrap();
        let nf = neighbor_mean_features(&g);
        assert_eq!(nf, array![[2.0], [2.0], [2.0], [0.0]]);
    }

    #[test]
    fn neighbor_mean_of_constant_features() {
        let g = two_triangles_bridged()
            .with_features(Array2::from_elem((6, 3), 1.75))
            .unwrap();
        let nf = neighbor_mean_features(&g);
        assert!(nf.iter().all(|&v| (v - 1.75).abs() < 1e-15));
    }

    #[test]
    fn masks_partition_nodes() {
        let m = Masks::new(vec![Split::Train, Split::Test, Split::Val, Split::Train]);
        assert_eq!(m.nodes(Split::Train), vec![0, 3]);
        assert_eq!(m.count(Split::Val), 1);
        assert_eq!(Split::parse("none"), Some(Split::None));
        assert_eq!(Split::parse("bogus"), None);
    }
}
