use crate::error::{AtlasError, Result};

/// A surjective assignment of nodes to blocks `0..K`.
///
/// Block ids are canonical: block ids appear in order of their first node, so
/// two assignments describing the same grouping compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    assign: Vec<u32>,
    block_sizes: Vec<usize>,
}

impl Partition {
    /// Builds a partition from arbitrary block labels, renumbering them
    /// canonically. Labels need not be contiguous.
    pub fn from_labels<T: Copy + Eq + std::hash::Hash>(labels: &[T]) -> Self {
        let mut ids = std::collections::HashMap::new();
        let mut assign = Vec::with_capacity(labels.len());
        let mut block_sizes = Vec::new();
        for &l in labels {
            let next = ids.len() as u32;
            let id = *ids.entry(l).or_insert(next);
            if id as usize == block_sizes.len() {
                block_sizes.push(0);
            }
            block_sizes[id as usize] += 1;
            assign.push(id);
        }
        Partition { assign, block_sizes }
    }

    /// Accepts an assignment that must already use every id in `0..K`.
    /// Ids are kept as given (not renumbered).
    pub fn from_assignment(assign: Vec<u32>) -> Result<Self> {
        let k = assign.iter().max().map_or(0, |&m| m as usize + 1);
        let mut block_sizes = vec![0usize; k];
        for &a in &assign {
            block_sizes[a as usize] += 1;
        }
        if let Some(empty) = block_sizes.iter().position(|&s| s == 0) {
            return Err(AtlasError::Data(format!(
                "block {empty} is empty; block ids must cover 0..{k}"
            )));
        }
        Ok(Partition { assign, block_sizes })
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            assign: (0..n as u32).collect(),
            block_sizes: vec![1; n],
        }
    }

    pub fn single_block(n: usize) -> Self {
        Partition {
            assign: vec![0; n],
            block_sizes: if n == 0 { vec![] } else { vec![n] },
        }
    }

    pub fn len(&self) -> usize {
        self.assign.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assign.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assign
    }

    pub fn block_of(&self, node: usize) -> usize {
        self.assign[node] as usize
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// Members of each block, ascending.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.block_sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (i, &a) in self.assign.iter().enumerate() {
            out[a as usize].push(i);
        }
        out
    }

    /// Canonical renumbering (first-occurrence order).
    pub fn canonical(&self) -> Partition {
        Partition::from_labels(&self.assign)
    }
}
