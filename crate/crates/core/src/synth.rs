//! Planted-partition stochastic block model with a label-alignment knob.
//!
//! Community structure is fixed by `(n, blocks, p_in, p_out)`; `alignment`
//! only controls how labels relate to the planted blocks. A node keeps its
//! block's canonical label with probability `alignment` and otherwise takes
//! one of the other labels uniformly, so `alignment = 1 / blocks` makes labels
//! independent of blocks and `alignment = 0` makes them anti-aligned.

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::community::Partition;
use crate::error::{AtlasError, Result};
use crate::graph::{Graph, GraphBuilder, Masks, Split};
use crate::rng::{derive_seed, permutation, rng_from_seed, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct SbmSpec {
    pub n: usize,
    pub blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Probability that a node carries its block's canonical label.
    pub alignment: f64,
    /// Feature width; must be at least `blocks` when `feature_signal > 0`.
    pub feature_dim: usize,
    /// Amplitude of the one-hot label component of each feature row.
    pub feature_signal: f64,
    /// Standard deviation of the Gaussian noise added to every feature.
    pub feature_noise: f64,
    pub seed: u64,
}

impl Default for SbmSpec {
    fn default() -> Self {
        SbmSpec {
            n: 1000,
            blocks: 8,
            p_in: 0.05,
            p_out: 0.002,
            alignment: 1.0,
            feature_dim: 8,
            feature_signal: 1.0,
            feature_noise: 1.0,
            seed: 0,
        }
    }
}

impl SbmSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(AtlasError::InvalidParameter(msg));
        if self.n == 0 || self.blocks == 0 || self.blocks > self.n {
            return bad(format!(
                "need 1 <= blocks <= n, got n={} blocks={}",
                self.n, self.blocks
            ));
        }
        if !(0.0 <= self.p_out && self.p_out <= self.p_in && self.p_in <= 1.0) {
            return bad(format!(
                "need 0 <= p_out <= p_in <= 1, got p_in={} p_out={}",
                self.p_in, self.p_out
            ));
        }
        if !(0.0..=1.0).contains(&self.alignment) {
            return bad(format!("alignment must lie in [0, 1], got {}", self.alignment));
        }
        if !(self.feature_noise >= 0.0 && self.feature_noise.is_finite()) {
            return bad(format!("feature noise must be >= 0, got {}", self.feature_noise));
        }
        if self.feature_signal != 0.0 && self.feature_dim < self.blocks {
            return bad(format!(
                "feature_dim {} cannot hold a one-hot label over {} classes",
                self.feature_dim, self.blocks
            ));
        }
        Ok(())
    }

    /// Planted block of node `i` (contiguous, balanced ranges).
    pub fn block_of(&self, i: usize) -> usize {
        i * self.blocks / self.n
    }

    /// `n² (p_in / B + p_out (B − 1) / B) / 2`
    pub fn expected_edges(&self) -> f64 {
        let (n, b) = (self.n as f64, self.blocks as f64);
        n * n * (self.p_in / b + self.p_out * (b - 1.0) / b) / 2.0
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticGraph {
    pub graph: Graph,
    /// Planted block of every node.
    pub blocks: Partition,
    pub warnings: Vec<String>,
}

pub fn generate(spec: &SbmSpec) -> Result<SyntheticGraph> {
    spec.validate()?;
    let n = spec.n;
    let mut warnings = Vec::new();
    if spec.p_out == 0.0 && spec.blocks > 1 {
        warnings.push(format!(
            "p_out = 0 with {} blocks: the graph has at least {} components",
            spec.blocks, spec.blocks
        ));
    }

    let block: Vec<usize> = (0..n).map(|i| spec.block_of(i)).collect();
    let mut starts = vec![0usize; spec.blocks + 1];
    for &b in &block {
        starts[b + 1] += 1;
    }
    for b in 0..spec.blocks {
        starts[b + 1] += starts[b];
    }

    let mut edge_rng = rng_from_seed(derive_seed(spec.seed, 1));
    let mut builder = GraphBuilder::new(n);
    for a in 0..spec.blocks {
        let (sa, ea) = (starts[a], starts[a + 1]);
        sample_within(ea - sa, spec.p_in, &mut edge_rng, |i, j| {
            builder.add_edge(sa + i, sa + j).expect("in range");
        });
        for b in a + 1..spec.blocks {
            let (sb, eb) = (starts[b], starts[b + 1]);
            sample_between(ea - sa, eb - sb, spec.p_out, &mut edge_rng, |i, j| {
                builder.add_edge(sa + i, sb + j).expect("in range");
            });
        }
    }

    let mut label_rng = rng_from_seed(derive_seed(spec.seed, 2));
    let labels: Vec<u32> = block
        .iter()
        .map(|&b| {
            if spec.blocks == 1 || label_rng.random_bool(spec.alignment) {
                b as u32
            } else {
                // Uniform over the other labels.
                let r = label_rng.random_range(0..spec.blocks - 1);
                (if r >= b { r + 1 } else { r }) as u32
            }
        })
        .collect();

    let mut feat_rng = rng_from_seed(derive_seed(spec.seed, 3));
    let noise = Normal::new(0.0, spec.feature_noise).expect("validated noise");
    let mut features = Array2::zeros((n, spec.feature_dim));
    for (i, mut row) in features.rows_mut().into_iter().enumerate() {
        for v in row.iter_mut() {
            *v = noise.sample(&mut feat_rng);
        }
        if spec.feature_signal != 0.0 {
            row[labels[i] as usize] += spec.feature_signal;
        }
    }

    let masks = random_masks(n, derive_seed(spec.seed, 4));
    let graph = builder
        .build_with_features(features)?
        .with_labels(labels)?
        .with_masks(masks)?;
    Ok(SyntheticGraph {
        graph,
        blocks: Partition::from_labels(&block),
        warnings,
    })
}

/// Random 60/20/20 train/val/test split.
pub fn random_masks(n: usize, seed: u64) -> Masks {
    let order = permutation(n, &mut rng_from_seed(seed));
    let n_train = n * 6 / 10;
    let n_val = n * 2 / 10;
    let mut splits = vec![Split::Test; n];
    for (rank, &node) in order.iter().enumerate() {
        splits[node] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }
    Masks::new(splits)
}

/// Geometric gap to the next success of a Bernoulli(p) sequence.
fn skip(p: f64, rng: &mut Rng) -> usize {
    if p >= 1.0 {
        return 0;
    }
    let r: f64 = rng.random();
    ((1.0 - r).ln() / (1.0 - p).ln()).floor() as usize
}

/// Samples each unordered pair of `0..size` independently with probability `p`.
fn sample_within(size: usize, p: f64, rng: &mut Rng, mut emit: impl FnMut(usize, usize)) {
    if p <= 0.0 || size < 2 {
        return;
    }
    let (mut v, mut w) = (1usize, 0usize);
    let mut first = true;
    while v < size {
        let step = skip(p, rng);
        w = if first { step } else { w + 1 + step };
        first = false;
        while w >= v && v < size {
            w -= v;
            v += 1;
        }
        if v < size {
            emit(v, w);
        }
    }
}

/// Samples each pair in `0..rows × 0..cols` independently with probability `p`.
fn sample_between(rows: usize, cols: usize, p: f64, rng: &mut Rng, mut emit: impl FnMut(usize, usize)) {
    if p <= 0.0 || rows == 0 || cols == 0 {
        return;
    }
    let total = rows * cols;
    let mut k = skip(p, rng);
    while k < total {
        emit(k / cols, k % cols);
        k = k.saturating_add(1 + skip(p, rng));
    }
}
