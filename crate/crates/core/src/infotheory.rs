//! Entropy, mutual information and NMI between partitions, plus the
//! refinement relation and the refinement/NMI condition check.
//!
//! Natural logarithms throughout; `0 · log 0 = 0`.

use std::collections::HashMap;

use rand::Rng as _;

use crate::community::Partition;
use crate::error::{AtlasError, Result};
use crate::rng::Rng;

/// Sparse contingency table between two partitions of the same ground set.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    /// Non-zero cells `((i, j), n_ij)` sorted by `(i, j)`.
    cells: Vec<((u32, u32), u64)>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    pub fn new(p: &Partition, q: &Partition) -> Result<Self> {
        check_same_ground_set(p, q)?;
        let mut counts: HashMap<(u32, u32), u64> = HashMap::new();
        for (&a, &b) in p.assignment().iter().zip(q.assignment()) {
            *counts.entry((a, b)).or_insert(0) += 1;
        }
        let mut cells: Vec<_> = counts.into_iter().collect();
        cells.sort_unstable_by_key(|&(ij, _)| ij);
        Ok(ContingencyTable {
            cells,
            row_sums: p.block_sizes().iter().map(|&s| s as u64).collect(),
            col_sums: q.block_sizes().iter().map(|&s| s as u64).collect(),
            total: p.len() as u64,
        })
    }

    pub fn cells(&self) -> &[((u32, u32), u64)] {
        &self.cells
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// `I = Σ (n_ij / N) log(N n_ij / (n_i n_j))`
    pub fn mutual_information(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let n = self.total as f64;
        let ln_n = n.ln();
        let mi: f64 = self
            .cells
            .iter()
            .map(|&((i, j), c)| {
                let c = c as f64;
                let ni = self.row_sums[i as usize] as f64;
                let nj = self.col_sums[j as usize] as f64;
                c / n * (ln_n + c.ln() - ni.ln() - nj.ln())
            })
            .sum();
        mi.max(0.0)
    }
}

fn check_same_ground_set(p: &Partition, q: &Partition) -> Result<()> {
    if p.len() != q.len() {
        return Err(AtlasError::Shape(format!(
            "partitions cover different ground sets ({} vs {} elements)",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

fn entropy_of_counts(counts: impl Iterator<Item = usize>, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let h: f64 = counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    h.max(0.0)
}

/// `H(P) = −Σ (n_i / N) log(n_i / N)`
pub fn entropy(p: &Partition) -> f64 {
    entropy_of_counts(p.block_sizes().iter().copied(), p.len())
}

pub fn mutual_information(p: &Partition, q: &Partition) -> Result<f64> {
    Ok(ContingencyTable::new(p, q)?.mutual_information())
}

/// NMI value with a flag for the degenerate `H(P) + H(Q) = 0` case, where the
/// score is defined as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nmi {
    pub value: f64,
    pub degenerate: bool,
}

/// `NMI(P, Q) = 2 I(P; Q) / (H(P) + H(Q))`
pub fn nmi_detailed(p: &Partition, q: &Partition) -> Result<Nmi> {
    let i = mutual_information(p, q)?;
    let denom = entropy(p) + entropy(q);
    if denom <= 0.0 {
        return Ok(Nmi {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(Nmi {
        value: (2.0 * i / denom).clamp(0.0, 1.0),
        degenerate: false,
    })
}

pub fn nmi(p: &Partition, q: &Partition) -> Result<f64> {
    nmi_detailed(p, q).map(|r| r.value)
}

/// True iff every block of `s` lies inside a single block of `p`.
pub fn is_refinement(s: &Partition, p: &Partition) -> bool {
    if s.len() != p.len() {
        return false;
    }
    let mut parent = vec![u32::MAX; s.num_blocks()];
    for (&a, &b) in s.assignment().iter().zip(p.assignment()) {
        let slot = &mut parent[a as usize];
        if *slot == u32::MAX {
            *slot = b;
        } else if *slot != b {
            return false;
        }
    }
    true
}

/// Information quantities for a refinement step `C → C′` against labels `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementReport {
    /// `I(L; C′) − I(L; C)`
    pub delta_mi: f64,
    /// `H(C′) − H(C)`
    pub delta_h: f64,
    pub nmi_before: f64,
    pub nmi_after: f64,
    /// `ΔI / ΔH`
    pub gain_per_entropy: f64,
    /// `NMI(C; L) / 2`
    pub threshold: f64,
    /// Whether `ΔI / ΔH > NMI(C; L) / 2`.
    pub predicted_increase: bool,
    /// Whether `NMI(C′; L) > NMI(C; L)`.
    pub actual_increase: bool,
}

impl RefinementReport {
    pub fn prediction_holds(&self) -> bool {
        self.predicted_increase == self.actual_increase
    }
}

/// Smallest entropy change accepted by [`refinement_report`].
pub const MIN_ENTROPY_GAIN: f64 = 1e-12;

pub fn refinement_report(labels: &Partition, coarse: &Partition, refined: &Partition) -> Result<RefinementReport> {
    check_same_ground_set(labels, coarse)?;
    check_same_ground_set(labels, refined)?;
    if !is_refinement(refined, coarse) {
        return Err(AtlasError::InvalidParameter(
            "second community partition is not a refinement of the first".into(),
        ));
    }
    let h_before = entropy(coarse);
    let h_after = entropy(refined);
    let delta_h = h_after - h_before;
    if delta_h <= MIN_ENTROPY_GAIN {
        return Err(AtlasError::InvalidParameter(format!(
            "refinement does not increase entropy (ΔH = {delta_h:e})"
        )));
    }
    let h_labels = entropy(labels);
    let i_before = mutual_information(labels, coarse)?;
    let i_after = mutual_information(labels, refined)?;
    let delta_mi = i_after - i_before;
    let nmi_of = |i: f64, h: f64| {
        let d = h + h_labels;
        if d > 0.0 {
            2.0 * i / d
        } else {
            0.0
        }
    };
    let nmi_before = nmi_of(i_before, h_before);
    let nmi_after = nmi_of(i_after, h_after);
    let gain_per_entropy = delta_mi / delta_h;
    let threshold = nmi_before / 2.0;
    Ok(RefinementReport {
        delta_mi,
        delta_h,
        nmi_before,
        nmi_after,
        gain_per_entropy,
        threshold,
        predicted_increase: gain_per_entropy > threshold,
        actual_increase: nmi_after > nmi_before,
    })
}

/// Random partitions and exact refinements for property checks and demos.
pub mod sampling {
    use super::*;

    /// Uniform block label in `0..k` per element.
    pub fn random_partition(n: usize, k: usize, rng: &mut Rng) -> Partition {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k.max(1))).collect();
        Partition::from_labels(&labels)
    }

    /// Splits each block of size ≥ 2 with probability ½ into two uniformly
    /// random non-empty halves. The result is always a refinement of `p`.
    pub fn random_refinement(p: &Partition, rng: &mut Rng) -> Partition {
        let mut labels: Vec<usize> = p.assignment().iter().map(|&a| a as usize).collect();
        let mut next = p.num_blocks();
        for members in p.blocks() {
            if members.len() < 2 || !rng.random_bool(0.5) {
                continue;
            }
            // Random non-empty proper subset: shuffle, then cut at 1..len.
            let mut shuffled = members.clone();
            rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), rng);
            let cut = rng.random_range(1..shuffled.len());
            for &node in &shuffled[..cut] {
                labels[node] = next;
            }
            next += 1;
        }
        Partition::from_labels(&labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn part(labels: &[u32]) -> Partition {
        Partition::from_labels(labels)
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(&Partition::single_block(5)), 0.0);
        assert!((entropy(&part(&[0, 0, 1, 1])) - 2f64.ln()).abs() < 1e-15);
        let expect = -(0.25f64 * 0.25f64.ln()) - 0.75 * 0.75f64.ln();
        assert!((entropy(&part(&[0, 1, 1, 1])) - expect).abs() < 1e-15);
        assert!((entropy(&part(&[0, 1, 1, 1])) - 0.5623).abs() < 1e-4);
    }

    #[test]
    fn mutual_information_values() {
        let p = part(&[0, 0, 1, 1, 2]);
        assert!((mutual_information(&p, &p).unwrap() - entropy(&p)).abs() < 1e-15);
        let single = Partition::single_block(5);
        assert_eq!(mutual_information(&single, &p).unwrap(), 0.0);
        let a = part(&[0, 0, 1, 1]);
        let b = part(&[0, 1, 0, 1]);
        assert!(mutual_information(&a, &b).unwrap().abs() < 1e-15);
        assert!(mutual_information(&a, &part(&[0, 1, 0])).is_err());
    }

    #[test]
    fn nmi_values() {
        let a = part(&[0, 0, 1, 1]);
        let b = part(&[0, 1, 0, 1]);
        assert!((nmi(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!(nmi(&a, &b).unwrap().abs() < 1e-15);
        let d = nmi_detailed(&Partition::single_block(4), &Partition::single_block(4)).unwrap();
        assert!(d.degenerate);
        assert_eq!(d.value, 0.0);
    }

    #[test]
    fn refinement_relation() {
        let a = part(&[0, 0, 1, 1]);
        let b = part(&[0, 1, 0, 1]);
        assert!(is_refinement(&Partition::singletons(4), &a));
        assert!(is_refinement(&a, &a));
        assert!(!is_refinement(&a, &b));
        assert!(is_refinement(&a, &Partition::single_block(4)));
    }

    #[test]
    fn refinement_report_split_into_labels() {
        let labels = part(&[0, 0, 1, 1]);
        let coarse = Partition::single_block(4);
        let refined = part(&[0, 0, 1, 1]);
        let r = refinement_report(&labels, &coarse, &refined).unwrap();
        assert!((r.delta_mi - 2f64.ln()).abs() < 1e-15);
        assert!((r.delta_h - 2f64.ln()).abs() < 1e-15);
        assert_eq!(r.nmi_before, 0.0);
        assert!(r.predicted_increase && r.actual_increase);
    }

    #[test]
    fn refinement_report_split_pure_block() {
        // Labels and coarse communities agree; splitting a pure block adds
        // entropy without information.
        let labels = part(&[0, 0, 0, 0, 1, 1]);
        let coarse = part(&[0, 0, 0, 0, 1, 1]);
        let refined = part(&[0, 0, 1, 1, 2, 2]);
        let r = refinement_report(&labels, &coarse, &refined).unwrap();
        assert!(r.delta_mi.abs() < 1e-15);
        assert!(r.delta_h > 0.0);
        assert!(r.nmi_after < r.nmi_before);
        assert!(!r.predicted_increase);
        assert!(r.prediction_holds());
    }

    #[test]
    fn refinement_report_rejects_bad_input() {
        let a = part(&[0, 0, 1, 1]);
        let b = part(&[0, 1, 0, 1]);
        assert!(refinement_report(&a, &a, &a).is_err());
        assert!(refinement_report(&a, &a, &b).is_err());
    }

    #[test]
    fn random_refinement_is_refinement() {
        let mut rng = rng_from_seed(4);
        for _ in 0..200 {
            let p = sampling::random_partition(30, 5, &mut rng);
            let r = sampling::random_refinement(&p, &mut rng);
            assert!(is_refinement(&r, &p));
            assert!(r.num_blocks() >= p.num_blocks());
        }
    }
}
