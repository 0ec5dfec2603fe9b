use std::fmt;
use std::time::Instant;

use ndarray::{concatenate, Array2, Axis};
use rand::seq::SliceRandom;

use super::adam::{Adam, AdamConfig};
use super::loss::{loss_and_grad, Targets};
use super::metrics::{accuracy, binary_auc_from_logits, f1_micro, Metric};
use super::mlp::{backward, forward, forward_cached, Architecture, MlpParams, Mode};
use crate::error::{AtlasError, Result};
use crate::features::{DesignSource, FeatureOptions, DEFAULT_COMMUNITY_DIM};
use crate::graph::{Graph, Masks, Split};
use crate::resolution::ResolutionProfile;
use crate::rng::{derive_seed, rng_from_seed};

/// Rows per forward pass when evaluating, to bound memory on large graphs.
const EVAL_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    SingleLabel,
    MultiLabel,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::SingleLabel => "single-label",
            Task::MultiLabel => "multi-label",
        }
    }

    pub fn parse(s: &str) -> Option<Task> {
        match s {
            "single-label" | "single" => Some(Task::SingleLabel),
            "multi-label" | "multi" => Some(Task::MultiLabel),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub layers: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    pub task: Task,
    pub metric: Metric,
    /// Width `d_c` of every community embedding.
    pub community_dim: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            layers: 3,
            hidden: 256,
            dropout: 0.5,
            lr: 1e-4,
            epochs: 200,
            batch: 128,
            seed: 0,
            task: Task::SingleLabel,
            metric: Metric::Accuracy,
            community_dim: DEFAULT_COMMUNITY_DIM,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(AtlasError::InvalidParameter(m));
        if self.layers == 0 {
            return bad("layers must be >= 1".into());
        }
        if self.layers > 1 && self.hidden == 0 {
            return bad("hidden width must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate must be > 0, got {}", self.lr));
        }
        if self.batch == 0 {
            return bad("batch size must be >= 1".into());
        }
        if self.community_dim == 0 {
            return bad("community dimension must be >= 1".into());
        }
        match (self.task, self.metric) {
            (Task::SingleLabel, Metric::F1Micro) => bad("f1-micro is a multi-label metric".into()),
            (Task::MultiLabel, Metric::Accuracy | Metric::RocAuc) => {
                bad(format!("{} is a single-label metric", self.metric))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// `None` when the validation mask is empty.
    pub val_metric: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timings {
    pub preprocessing_s: f64,
    pub per_epoch_s: f64,
    pub inference_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (highest validation metric, earliest on ties).
    pub best_epoch: usize,
    pub metric: Metric,
    pub val_metric: Option<f64>,
    pub test_metric: Option<f64>,
    pub num_parameters: usize,
    pub timings: Timings,
}

impl TrainReport {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }

    /// One `key=value` pair per line.
    pub fn summary(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("nan".to_string(), |v| format!("{v:.6}"));
        format!(
            "metric={}\ntest_metric={}\nval_metric={}\nbest_epoch={}\nepochs={}\nparameters={}\n\
             preprocessing_s={:.6}\nper_epoch_s={:.6}\ninference_s={:.6}\n",
            self.metric,
            opt(self.test_metric),
            opt(self.val_metric),
            self.best_epoch,
            self.epochs.len(),
            self.num_parameters,
            self.timings.preprocessing_s,
            self.timings.per_epoch_s,
            self.timings.inference_s,
        )
    }
}

impl fmt::Display for TrainReport {
    /// The per-epoch log.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "#epoch\ttrain_loss\tval_{}", self.metric)?;
        for e in &self.epochs {
            match e.val_metric {
                Some(v) => writeln!(f, "{}\t{:.6}\t{:.6}", e.epoch, e.train_loss, v)?,
                None => writeln!(f, "{}\t{:.6}\tnan", e.epoch, e.train_loss)?,
            }
        }
        Ok(())
    }
}

/// Builds the design for `g` and `profile` and trains on its labels and masks.
pub fn train(
    g: &Graph,
    profile: &ResolutionProfile,
    cfg: &MlpConfig,
    opts: FeatureOptions,
) -> Result<(MlpParams, TrainReport)> {
    let labels = g
        .labels()
        .ok_or_else(|| AtlasError::Data("training needs node labels".into()))?;
    let masks = g
        .masks()
        .ok_or_else(|| AtlasError::Data("training needs train/val/test masks".into()))?;
    let start = Instant::now();
    let source = DesignSource::new(g, profile, opts);
    let prep = start.elapsed().as_secs_f64();
    let targets = Targets::Classes {
        labels: labels.to_vec(),
        num_classes: g.num_classes(),
    };
    let (params, mut report) = train_on(&source, &targets, masks, cfg)?;
    report.timings.preprocessing_s = prep;
    Ok((params, report))
}

/// Trains on a prepared design.
pub fn train_on(
    source: &DesignSource,
    targets: &Targets,
    masks: &Masks,
    cfg: &MlpConfig,
) -> Result<(MlpParams, TrainReport)> {
    cfg.validate()?;
    check_task(cfg, targets)?;
    if targets.len() != source.num_rows() || masks.len() != source.num_rows() {
        return Err(AtlasError::Shape(format!(
            "design has {} rows, targets {}, masks {}",
            source.num_rows(),
            targets.len(),
            masks.len()
        )));
    }
    let train_rows = masks.nodes(Split::Train);
    if train_rows.is_empty() {
        return Err(AtlasError::Data("train mask is empty".into()));
    }
    let val_rows = masks.nodes(Split::Val);
    let test_rows = masks.nodes(Split::Test);

    let arch = Architecture {
        base_width: source.base_width(),
        block_counts: source.block_counts(),
        community_dim: cfg.community_dim,
        hidden: cfg.hidden,
        layers: cfg.layers,
        classes: targets.output_width(),
    };
    let mut params = MlpParams::init(&arch, &mut rng_from_seed(derive_seed(cfg.seed, 0x1417)))?;
    let mut opt = Adam::new(&params, AdamConfig::with_lr(cfg.lr));
    let mut order_rng = rng_from_seed(derive_seed(cfg.seed, 0x0B47));
    let mut drop_rng = rng_from_seed(derive_seed(cfg.seed, 0xD809));

    let mut best = params.clone();
    let mut best_epoch = 0;
    let mut best_val: Option<f64> = None;
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut epoch_time = 0.0;
    let mut order = train_rows.clone();

    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        order.shuffle(&mut order_rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch) {
            let mode = if cfg.dropout > 0.0 {
                Mode::Train {
                    dropout: cfg.dropout,
                    rng: &mut drop_rng,
                }
            } else {
                Mode::Eval
            };
            let (logits, cache) = forward_cached(&params, source, batch, mode)?;
            let (loss, dlogits) = loss_and_grad(logits.view(), targets, batch)?;
            if !loss.is_finite() {
                return Err(AtlasError::Diverged(format!(
                    "loss became {loss} in epoch {epoch}; try a smaller learning rate"
                )));
            }
            total += loss * batch.len() as f64;
            let grads = backward(&params, source, batch, &cache, dlogits);
            opt.step(&mut params, &grads);
        }
        epoch_time += start.elapsed().as_secs_f64();
        let train_loss = total / order.len() as f64;

        let val_metric = if val_rows.is_empty() {
            None
        } else {
            Some(evaluate(&params, source, targets, &val_rows, cfg.metric)?)
        };
        // Without a validation split the last epoch wins.
        let improved = match (val_metric, best_val) {
            (Some(v), Some(b)) => v > b,
            (Some(_), None) => true,
            (None, _) => true,
        };
        if improved {
            best.clone_from(&params);
            best_epoch = epoch;
            best_val = val_metric;
        }
        records.push(EpochRecord {
            epoch,
            train_loss,
            val_metric,
        });
    }

    let start = Instant::now();
    let test_metric = if test_rows.is_empty() {
        None
    } else {
        Some(evaluate(&best, source, targets, &test_rows, cfg.metric)?)
    };
    let inference_s = start.elapsed().as_secs_f64();

    let report = TrainReport {
        epochs: records,
        best_epoch,
        metric: cfg.metric,
        val_metric: best_val,
        test_metric,
        num_parameters: best.num_parameters(),
        timings: Timings {
            preprocessing_s: 0.0,
            per_epoch_s: if cfg.epochs == 0 {
                0.0
            } else {
                epoch_time / cfg.epochs as f64
            },
            inference_s,
        },
    };
    Ok((best, report))
}

fn check_task(cfg: &MlpConfig, targets: &Targets) -> Result<()> {
    let ok = matches!(
        (cfg.task, targets),
        (Task::SingleLabel, Targets::Classes { .. }) | (Task::MultiLabel, Targets::MultiLabel(_))
    );
    if ok {
        Ok(())
    } else {
        Err(AtlasError::InvalidParameter(format!(
            "targets do not match the {} task",
            cfg.task.name()
        )))
    }
}

/// Logits for `rows` in evaluation mode. Reads only the design.
pub fn predict(params: &MlpParams, source: &DesignSource, rows: &[usize]) -> Result<Array2<f64>> {
    let parts = rows
        .chunks(EVAL_CHUNK)
        .map(|c| forward(params, source, c, Mode::Eval))
        .collect::<Result<Vec<_>>>()?;
    if parts.len() == 1 {
        return Ok(parts.into_iter().next().expect("one chunk"));
    }
    let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
    concatenate(Axis(0), &views).map_err(|e| AtlasError::Shape(e.to_string()))
}

/// `metric` of the model on `rows`.
pub fn evaluate(
    params: &MlpParams,
    source: &DesignSource,
    targets: &Targets,
    rows: &[usize],
    metric: Metric,
) -> Result<f64> {
    if rows.is_empty() {
        return Err(AtlasError::InvalidParameter("cannot evaluate on an empty mask".into()));
    }
    let logits = predict(params, source, rows)?;
    match (metric, targets) {
        (Metric::Accuracy, Targets::Classes { .. }) => Ok(accuracy(
            logits.view(),
            &targets.labels_of(rows).expect("class targets"),
        )),
        (Metric::RocAuc, Targets::Classes { .. }) => {
            binary_auc_from_logits(logits.view(), &targets.labels_of(rows).expect("class targets"))
        }
        (Metric::F1Micro, Targets::MultiLabel(_)) => f1_micro(
            logits.view(),
            targets.rows_of(rows).expect("multi-label targets").view(),
        ),
        _ => Err(AtlasError::InvalidParameter(format!(
            "metric {metric} does not apply to these targets"
        ))),
    }
}
