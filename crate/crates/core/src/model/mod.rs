//! The node classifier: network, loss, optimizer, training loop and metrics.

mod adam;
mod gradcheck;
mod loss;
pub mod metrics;
mod mlp;
mod train;

pub use adam::{Adam, AdamConfig};
pub use gradcheck::{grad_check, grad_check_at, GradCheck};
pub use loss::{loss_and_grad, Targets};
pub use metrics::Metric;
pub use mlp::{forward, gelu, gelu_grad, Architecture, Dense, LayerNorm, MlpParams, Mode, LAYER_NORM_EPS};
pub use train::{evaluate, predict, train, train_on, EpochRecord, MlpConfig, Task, Timings, TrainReport};
