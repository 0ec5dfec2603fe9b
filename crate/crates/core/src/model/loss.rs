use ndarray::{Array2, ArrayView2};

use crate::error::{AtlasError, Result};

/// Training targets for every node of a design.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    /// Single-label classification; softmax cross-entropy.
    Classes { labels: Vec<u32>, num_classes: usize },
    /// Multi-hot rows; per-class sigmoid binary cross-entropy.
    MultiLabel(Array2<f64>),
    /// Real-valued outputs; halved squared error. Used for gradient checks.
    Continuous(Array2<f64>),
}

impl Targets {
    pub fn classes(labels: Vec<u32>) -> Self {
        let num_classes = labels.iter().max().map_or(0, |&m| m as usize + 1);
        Targets::Classes { labels, num_classes }
    }

    pub fn len(&self) -> usize {
        match self {
            Targets::Classes { labels, .. } => labels.len(),
            Targets::MultiLabel(t) | Targets::Continuous(t) => t.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn output_width(&self) -> usize {
        match self {
            Targets::Classes { num_classes, .. } => *num_classes,
            Targets::MultiLabel(t) | Targets::Continuous(t) => t.ncols(),
        }
    }

    pub fn labels_of(&self, rows: &[usize]) -> Option<Vec<u32>> {
        match self {
            Targets::Classes { labels, .. } => Some(rows.iter().map(|&r| labels[r]).collect()),
            _ => None,
        }
    }

    pub fn rows_of(&self, rows: &[usize]) -> Option<Array2<f64>> {
        match self {
            Targets::MultiLabel(t) | Targets::Continuous(t) => Some(t.select(ndarray::Axis(0), rows)),
            _ => None,
        }
    }
}

/// Mean loss over `rows` and its gradient with respect to `logits`.
pub fn loss_and_grad(logits: ArrayView2<f64>, targets: &Targets, rows: &[usize]) -> Result<(f64, Array2<f64>)> {
    let b = rows.len();
    if b == 0 || logits.nrows() != b {
        return Err(AtlasError::Shape("logits and batch rows disagree".into()));
    }
    if logits.ncols() != targets.output_width() {
        return Err(AtlasError::Shape(format!(
            "{} logits per row for {} targets",
            logits.ncols(),
            targets.output_width()
        )));
    }
    let bf = b as f64;
    match targets {
        Targets::Classes { labels, .. } => {
            let mut grad = logits.to_owned();
            let mut loss = 0.0;
            for (r, (mut row, &node)) in grad.rows_mut().into_iter().zip(rows).enumerate() {
                let y = labels[node] as usize;
                let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                row.mapv_inplace(|v| (v - max).exp());
                let sum = row.sum();
                loss += sum.ln() - (logits[[r, y]] - max);
                row.mapv_inplace(|v| v / sum / bf);
                row[y] -= 1.0 / bf;
            }
            Ok((loss / bf, grad))
        }
        Targets::MultiLabel(t) => {
            let c = logits.ncols() as f64;
            let mut grad = Array2::zeros(logits.dim());
            let mut loss = 0.0;
            for (r, &node) in rows.iter().enumerate() {
                for j in 0..logits.ncols() {
                    let z = logits[[r, j]];
                    let y = t[[node, j]];
                    // log(1 + e^z) − y z, stable for both signs.
                    loss += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
                    let s = 1.0 / (1.0 + (-z).exp());
                    grad[[r, j]] = (s - y) / (bf * c);
                }
            }
            Ok((loss / (bf * c), grad))
        }
        Targets::Continuous(t) => {
            let mut grad = Array2::zeros(logits.dim());
            let mut loss = 0.0;
            for (r, &node) in rows.iter().enumerate() {
                for j in 0..logits.ncols() {
                    let d = logits[[r, j]] - t[[node, j]];
                    loss += 0.5 * d * d;
                    grad[[r, j]] = d / bf;
                }
            }
            Ok((loss / bf, grad))
        }
    }
}
