//! Classification metrics: accuracy, binary ROC-AUC and micro-averaged F1.

use std::fmt;

use ndarray::{ArrayView1, ArrayView2};

use crate::error::{AtlasError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Accuracy,
    RocAuc,
    F1Micro,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::RocAuc => "roc-auc",
            Metric::F1Micro => "f1-micro",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        match s.to_ascii_lowercase().as_str() {
            "acc" | "accuracy" => Some(Metric::Accuracy),
            "roc-auc" | "rocauc" | "auc" => Some(Metric::RocAuc),
            "f1" | "f1-micro" | "f1micro" => Some(Metric::F1Micro),
            _ => None,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Fraction of rows whose argmax matches the label. Ties go to the lowest index.
pub fn accuracy(logits: ArrayView2<f64>, labels: &[u32]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let correct = logits
        .rows()
        .into_iter()
        .zip(labels)
        .filter(|(row, &y)| argmax(*row) == y as usize)
        .count();
    correct as f64 / labels.len() as f64
}

pub fn argmax(row: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Area under the ROC curve via the rank-sum statistic; tied scores receive
/// average ranks. `positive[i]` marks the positive class.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(AtlasError::Shape("scores and labels differ in length".into()));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(AtlasError::InvalidParameter(
            "ROC-AUC needs both positive and negative examples".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share their average.
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum += order[i..=j].iter().filter(|&&k| positive[k]).count() as f64 * avg;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// ROC-AUC of a two-class model, scoring by the class-1 softmax probability.
pub fn binary_auc_from_logits(logits: ArrayView2<f64>, labels: &[u32]) -> Result<f64> {
    if logits.ncols() != 2 {
        return Err(AtlasError::InvalidParameter(format!(
            "ROC-AUC requires exactly 2 classes, got {}",
            logits.ncols()
        )));
    }
    // softmax(z)_1 is monotone in z_1 - z_0.
    let scores: Vec<f64> = logits.rows().into_iter().map(|r| r[1] - r[0]).collect();
    let positive: Vec<bool> = labels.iter().map(|&y| y == 1).collect();
    roc_auc(&scores, &positive)
}

/// Micro-averaged F1 with predictions `sigmoid(logit) > 0.5`, i.e. `logit > 0`.
pub fn f1_micro(logits: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<f64> {
    if logits.dim() != targets.dim() {
        return Err(AtlasError::Shape("logits and targets differ in shape".into()));
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&z, &t) in logits.iter().zip(targets.iter()) {
        match (z > 0.0, t > 0.5) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    let denom = 2 * tp + fp + fneg;
    Ok(if denom == 0 {
        1.0
    } else {
        2.0 * tp as f64 / denom as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn perfect_and_constant_predictions() {
        let logits = array![[5.0, -1.0], [-2.0, 3.0], [0.0, 4.0]];
        let labels = [0, 1, 1];
        assert_eq!(accuracy(logits.view(), &labels), 1.0);
        assert_eq!(binary_auc_from_logits(logits.view(), &labels).unwrap(), 1.0);
        let flat = array![[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]];
        assert_eq!(binary_auc_from_logits(flat.view(), &[0, 1, 0, 1]).unwrap(), 0.5);
    }

    #[test]
    fn auc_hand_example() {
        let auc = roc_auc(&[0.9, 0.8, 0.4, 0.3], &[true, false, true, false]).unwrap();
        assert!((auc - 0.75).abs() < 1e-15);
    }

    #[test]
    fn auc_errors() {
        assert!(roc_auc(&[0.1, 0.2], &[true, true]).is_err());
        let three = array![[0.0, 1.0, 2.0]];
        assert!(binary_auc_from_logits(three.view(), &[1]).is_err());
    }

    #[test]
    fn f1_counts() {
        let z = array![[1.0, -1.0], [2.0, 1.0]];
        let t = array![[1.0, 0.0], [0.0, 1.0]];
        // tp = 2, fp = 1, fn = 0
        assert!((f1_micro(z.view(), t.view()).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn metric_names_roundtrip() {
        for m in [Metric::Accuracy, Metric::RocAuc, Metric::F1Micro] {
            assert_eq!(Metric::parse(m.name()), Some(m));
        }
    }
}
