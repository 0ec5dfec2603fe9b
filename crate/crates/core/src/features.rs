//! Community-augmented design matrices.
//!
//! For every retained resolution the community assignment is one-hot encoded
//! and projected through a `k_γ × d_c` matrix; the projections are appended
//! to the node features: `Z = [X ‖ H⁽¹⁾W⁽¹⁾ ‖ … ‖ H⁽ᵀ⁾W⁽ᵀ⁾]`. Because each
//! indicator row has a single one, `H W` is a row lookup into `W`.

use std::ops::Range;

use ndarray::{s, Array2, ArrayView2};
use rand::Rng as _;

use crate::community::Partition;
use crate::error::{AtlasError, Result};
use crate::graph::{neighbor_mean, Graph};
use crate::resolution::ResolutionProfile;
use crate::rng::Rng;

pub const DEFAULT_COMMUNITY_DIM: usize = 16;

/// Sparse `n × K` indicator matrix of a partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHot {
    columns: Vec<u32>,
    width: usize,
}

impl OneHot {
    pub fn nrows(&self) -> usize {
        self.columns.len()
    }

    pub fn ncols(&self) -> usize {
        self.width
    }

    /// Column holding the single one of `row`.
    pub fn hot_column(&self, row: usize) -> usize {
        self.columns[row] as usize
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows(), self.width));
        for (i, &c) in self.columns.iter().enumerate() {
            out[[i, c as usize]] = 1.0;
        }
        out
    }
}

pub fn one_hot(p: &Partition) -> OneHot {
    OneHot {
        columns: p.assignment().to_vec(),
        width: p.num_blocks(),
    }
}

/// `H W` computed as a row gather.
pub fn project(p: &Partition, w: ArrayView2<f64>) -> Result<Array2<f64>> {
    if w.nrows() != p.num_blocks() {
        return Err(AtlasError::Shape(format!(
            "projection has {} rows but the partition has {} blocks",
            w.nrows(),
            p.num_blocks()
        )));
    }
    let mut out = Array2::zeros((p.len(), w.ncols()));
    for (mut row, &c) in out.rows_mut().into_iter().zip(p.assignment()) {
        row.assign(&w.row(c as usize));
    }
    Ok(out)
}

/// One `k_γ × d_c` projection matrix per retained resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionParams {
    matrices: Vec<Array2<f64>>,
    dim: usize,
}

impl ProjectionParams {
    /// Uniform initialization in `±1/√k_γ`.
    pub fn init(block_counts: &[usize], dim: usize, rng: &mut Rng) -> Self {
        let matrices = block_counts
            .iter()
            .map(|&k| {
                let bound = 1.0 / (k.max(1) as f64).sqrt();
                Array2::from_shape_simple_fn((k, dim), || rng.random_range(-bound..=bound))
            })
            .collect();
        ProjectionParams { matrices, dim }
    }

    pub fn from_matrices(matrices: Vec<Array2<f64>>, dim: usize) -> Result<Self> {
        if let Some(m) = matrices.iter().find(|m| m.ncols() != dim) {
            return Err(AtlasError::Shape(format!(
                "projection with {} columns, expected {dim}",
                m.ncols()
            )));
        }
        Ok(ProjectionParams { matrices, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrices(&self) -> &[Array2<f64>] {
        &self.matrices
    }

    pub fn matrices_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.matrices
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

/// How the node-feature block of the design is formed.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FeatureOptions {
    /// Append mean-aggregated neighbor features for hops `1..=nf_hops`.
    pub nf_hops: usize,
    /// Standardize every column of the feature block to zero mean, unit variance.
    pub standardize: bool,
}

impl FeatureOptions {
    pub fn with_nf(nf: bool) -> Self {
        FeatureOptions {
            nf_hops: usize::from(nf),
            ..Default::default()
        }
    }
}

/// Column ranges of the design matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignLayout {
    pub features: Range<usize>,
    /// One range per resolution, ascending gamma.
    pub communities: Vec<Range<usize>>,
}

impl DesignLayout {
    pub fn width(&self) -> usize {
        self.communities.last().map_or(self.features.end, |r| r.end)
    }
}

/// Everything the classifier consumes: the node-feature block and the
/// community assignments. Holds no adjacency; inference needs nothing else.
#[derive(Debug, Clone)]
pub struct DesignSource {
    base: Array2<f64>,
    base_sparse: Option<SparseRows>,
    assignments: Vec<Partition>,
    gammas: Vec<f64>,
}

/// Density below which the feature block is also kept in CSR form.
const SPARSE_DENSITY: f64 = 0.1;

impl DesignSource {
    pub fn new(g: &Graph, profile: &ResolutionProfile, opts: FeatureOptions) -> Self {
        let mut base = g.features().clone();
        let mut hop = g.features().clone();
        for _ in 0..opts.nf_hops {
            hop = neighbor_mean(g, &hop);
            base = ndarray::concatenate![ndarray::Axis(1), base, hop];
        }
        if opts.standardize {
            standardize_columns(&mut base);
        }
        let assignments = profile.entries().iter().map(|e| e.partition.clone()).collect();
        let gammas = profile.gammas();
        Self::from_parts(base, assignments, gammas).expect("profile partitions cover the graph")
    }

    pub fn from_parts(base: Array2<f64>, assignments: Vec<Partition>, gammas: Vec<f64>) -> Result<Self> {
        if let Some(p) = assignments.iter().find(|p| p.len() != base.nrows()) {
            return Err(AtlasError::Shape(format!(
                "partition covers {} nodes, feature block has {} rows",
                p.len(),
                base.nrows()
            )));
        }
        if gammas.len() != assignments.len() {
            return Err(AtlasError::Shape("one gamma per assignment expected".into()));
        }
        let nnz = base.iter().filter(|&&v| v != 0.0).count();
        let density = nnz as f64 / (base.len().max(1)) as f64;
        let base_sparse = (density < SPARSE_DENSITY).then(|| SparseRows::from_dense(&base));
        Ok(DesignSource {
            base,
            base_sparse,
            assignments,
            gammas,
        })
    }

    /// Drops the CSR copy so the network always reads dense rows.
    pub fn without_sparse(mut self) -> Self {
        self.base_sparse = None;
        self
    }

    pub fn num_rows(&self) -> usize {
        self.base.nrows()
    }

    pub fn base(&self) -> &Array2<f64> {
        &self.base
    }

    pub fn base_sparse(&self) -> Option<&SparseRows> {
        self.base_sparse.as_ref()
    }

    pub fn base_width(&self) -> usize {
        self.base.ncols()
    }

    pub fn assignments(&self) -> &[Partition] {
        &self.assignments
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn block_counts(&self) -> Vec<usize> {
        self.assignments.iter().map(|p| p.num_blocks()).collect()
    }

    pub fn layout(&self, dim: usize) -> DesignLayout {
        let d = self.base_width();
        DesignLayout {
            features: 0..d,
            communities: (0..self.assignments.len())
                .map(|t| d + t * dim..d + (t + 1) * dim)
                .collect(),
        }
    }

    fn check_params(&self, params: &ProjectionParams) -> Result<()> {
        if params.len() != self.assignments.len() {
            return Err(AtlasError::Shape(format!(
                "{} projection matrices for {} resolutions",
                params.len(),
                self.assignments.len()
            )));
        }
        for (w, p) in params.matrices().iter().zip(&self.assignments) {
            if w.nrows() != p.num_blocks() {
                return Err(AtlasError::Shape(format!(
                    "projection has {} rows but the partition has {} blocks",
                    w.nrows(),
                    p.num_blocks()
                )));
            }
        }
        Ok(())
    }

    /// Materializes `Z` under frozen projection parameters.
    pub fn materialize(&self, params: &ProjectionParams) -> Result<AugmentedDesign> {
        self.check_params(params)?;
        let layout = self.layout(params.dim());
        let mut z = Array2::zeros((self.num_rows(), layout.width()));
        z.slice_mut(s![.., layout.features.clone()]).assign(&self.base);
        for ((p, w), cols) in self.assignments.iter().zip(params.matrices()).zip(&layout.communities) {
            z.slice_mut(s![.., cols.clone()]).assign(&project(p, w.view())?);
        }
        Ok(AugmentedDesign { z, layout })
    }
}

/// The materialized design `Z` and its column layout.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedDesign {
    pub z: Array2<f64>,
    pub layout: DesignLayout,
}

impl AugmentedDesign {
    pub fn width(&self) -> usize {
        self.z.ncols()
    }
}

/// Builds `Z = [X (‖ NF) ‖ E⁽γ₁⁾ ‖ … ‖ E⁽γ_T⁾]`.
pub fn build_design(
    g: &Graph,
    profile: &ResolutionProfile,
    params: &ProjectionParams,
    opts: FeatureOptions,
) -> Result<AugmentedDesign> {
    DesignSource::new(g, profile, opts).materialize(params)
}

pub fn standardize_columns(x: &mut Array2<f64>) {
    for mut col in x.columns_mut() {
        let n = col.len() as f64;
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        col.mapv_inplace(|v| if sd > 0.0 { (v - mean) / sd } else { 0.0 });
    }
}

/// Row-compressed copy of a mostly-zero matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<f64>,
    ncols: usize,
}

impl SparseRows {
    pub fn from_dense(x: &Array2<f64>) -> Self {
        let mut offsets = vec![0];
        let mut cols = Vec::new();
        let mut values = Vec::new();
        for row in x.rows() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    cols.push(j as u32);
                    values.push(v);
                }
            }
            offsets.push(cols.len());
        }
        SparseRows {
            offsets,
            cols,
            values,
            ncols: x.ncols(),
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.values[r])
            .map(|(&c, &v)| (c as usize, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::community::CommunityResult;
    use crate::graph::GraphBuilder;
    use crate::resolution::SearchConfig;
    use crate::rng::rng_from_seed;
    use ndarray::array;

    fn profile_of(parts: Vec<Partition>) -> ResolutionProfile {
        let entries = parts
            .into_iter()
            .enumerate()
            .map(|(t, p)| CommunityResult {
                gamma: 0.5 * (t + 1) as f64,
                partition: p,
                modularity: 0.5,
            })
            .collect();
        ResolutionProfile::new(entries, SearchConfig::default()).unwrap()
    }

    fn path_graph(d: usize) -> Graph {
        let mut b = GraphBuilder::new(5);
        for u in 0..4 {
            b.add_edge(u, u + 1).unwrap();
        }
        let x = Array2::from_shape_fn((5, d), |(i, j)| (i * d + j) as f64);
        b.build_with_features(x).unwrap()
    }

    #[test]
    fn one_hot_rows() {
        let h = one_hot(&Partition::from_labels(&[0, 1, 0]));
        assert_eq!(h.to_dense(), array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
        let single = one_hot(&Partition::single_block(4)).to_dense();
        assert_eq!(single, Array2::ones((4, 1)));
        assert!(h.to_dense().rows().into_iter().all(|r| r.sum() == 1.0));
    }

    #[test]
    fn project_identity_and_single_block() {
        let p = Partition::from_labels(&[0, 1, 2, 1]);
        let e = project(&p, Array2::eye(3).view()).unwrap();
        assert_eq!(e, one_hot(&p).to_dense());
        let w = array![[0.25, -1.0]];
        let e = project(&Partition::single_block(3), w.view()).unwrap();
        assert!(e.rows().into_iter().all(|r| r == w.row(0)));
        assert!(project(&p, Array2::<f64>::eye(2).view()).is_err());
    }

    #[test]
    fn project_matches_dense_product() {
        let p = Partition::from_labels(&[1, 0, 0, 1, 1]);
        let w = array![[0.1, -0.2, 0.3], [1.5, 0.0, -2.0]];
        let dense = one_hot(&p).to_dense().dot(&w);
        let e = project(&p, w.view()).unwrap();
        assert!((&e - &dense).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn empty_profile_design_is_features() {
        let g = path_graph(3);
        let profile = profile_of(vec![]);
        let params = ProjectionParams::init(&[], 16, &mut rng_from_seed(0));
        let d = build_design(&g, &profile, &params, FeatureOptions::default()).unwrap();
        assert_eq!(d.z, *g.features());
        assert_eq!(d.width(), 3);
    }

    #[test]
    fn width_law() {
        let g = path_graph(4);
        let parts = vec![Partition::from_labels(&[0, 0, 1, 1, 1]), Partition::singletons(5)];
        let profile = profile_of(parts);
        let params = ProjectionParams::init(&[2, 5], 3, &mut rng_from_seed(1));
        for nf in [false, true] {
            let d = build_design(&g, &profile, &params, FeatureOptions::with_nf(nf)).unwrap();
            let base = if nf { 8 } else { 4 };
            assert_eq!(d.width(), base + 2 * 3);
            assert_eq!(d.z.slice(s![.., 0..4]), *g.features());
        }
        let nf_only = build_design(
            &g,
            &profile_of(vec![]),
            &ProjectionParams::init(&[], 3, &mut rng_from_seed(1)),
            FeatureOptions::with_nf(true),
        )
        .unwrap();
        assert_eq!(nf_only.width(), 8);
    }

    #[test]
    fn mismatched_params_rejected() {
        let g = path_graph(2);
        let profile = profile_of(vec![Partition::from_labels(&[0, 0, 1, 1, 1])]);
        let wrong_rows = ProjectionParams::init(&[3], 4, &mut rng_from_seed(0));
        assert!(build_design(&g, &profile, &wrong_rows, FeatureOptions::default()).is_err());
        let wrong_count = ProjectionParams::init(&[2, 2], 4, &mut rng_from_seed(0));
        assert!(build_design(&g, &profile, &wrong_count, FeatureOptions::default()).is_err());
    }

    #[test]
    fn standardize_zero_mean_unit_variance() {
        let mut x = array![[1.0, 5.0], [3.0, 5.0], [5.0, 5.0]];
        standardize_columns(&mut x);
        assert!(x.column(0).sum().abs() < 1e-12);
        assert!((x.column(0).mapv(|v| v * v).sum() / 3.0 - 1.0).abs() < 1e-12);
        assert_eq!(x.column(1).sum(), 0.0);
    }

    #[test]
    fn sparse_rows_roundtrip() {
        let x = array![[0.0, 2.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, -3.0]];
        let s = SparseRows::from_dense(&x);
        assert_eq!(s.row(0).collect::<Vec<_>>(), vec![(1, 2.0)]);
        assert_eq!(s.row(1).count(), 0);
        assert_eq!(s.row(2).collect::<Vec<_>>(), vec![(0, 1.0), (2, -3.0)]);
    }
}
