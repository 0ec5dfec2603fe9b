//! Finite-difference verification of the analytic gradients.

use super::loss::{loss_and_grad, Targets};
use super::mlp::{backward, forward, forward_cached, Architecture, MlpParams, Mode};
use super::train::MlpConfig;
use crate::error::{AtlasError, Result};
use crate::features::DesignSource;
use crate::rng::{derive_seed, rng_from_seed};

pub const STEP: f64 = 1e-4;
pub const MAX_PARAMETERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// `max |a − n| / max(|a|, |n|, 1e-6)` over all parameters.
    pub max_relative_error: f64,
    pub max_abs_gradient: f64,
    pub parameters: usize,
}

/// Checks a freshly initialized network for `cfg` on every row of `source`.
pub fn grad_check(cfg: &MlpConfig, source: &DesignSource, targets: &Targets) -> Result<GradCheck> {
    if cfg.dropout != 0.0 {
        return Err(AtlasError::InvalidParameter("gradient check needs dropout = 0".into()));
    }
    let arch = Architecture {
        base_width: source.base_width(),
        block_counts: source.block_counts(),
        community_dim: cfg.community_dim,
        hidden: cfg.hidden,
        layers: cfg.layers,
        classes: targets.output_width(),
    };
    let params = MlpParams::init(&arch, &mut rng_from_seed(derive_seed(cfg.seed, 0x1417)))?;
    let rows: Vec<usize> = (0..source.num_rows()).collect();
    grad_check_at(&params, source, targets, &rows)
}

/// Checks the gradient at a given parameter point.
pub fn grad_check_at(
    params: &MlpParams,
    source: &DesignSource,
    targets: &Targets,
    rows: &[usize],
) -> Result<GradCheck> {
    let count = params.num_parameters();
    if count > MAX_PARAMETERS {
        return Err(AtlasError::InvalidParameter(format!(
            "gradient check is limited to {MAX_PARAMETERS} parameters, network has {count}"
        )));
    }
    let (logits, cache) = forward_cached(params, source, rows, Mode::Eval)?;
    let (_, dlogits) = loss_and_grad(logits.view(), targets, rows)?;
    let analytic = backward(params, source, rows, &cache, dlogits);

    let loss_at = |p: &MlpParams| -> Result<f64> {
        let z = forward(p, source, rows, Mode::Eval)?;
        Ok(loss_and_grad(z.view(), targets, rows)?.0)
    };

    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    let mut largest: f64 = 0.0;
    let tensors = analytic.slices().len();
    for t in 0..tensors {
        let len = analytic.slices()[t].len();
        for i in 0..len {
            let orig = probe.slices()[t][i];
            probe.slices_mut()[t][i] = orig + STEP;
            let up = loss_at(&probe)?;
            probe.slices_mut()[t][i] = orig - STEP;
            let down = loss_at(&probe)?;
            probe.slices_mut()[t][i] = orig;
            let numeric = (up - down) / (2.0 * STEP);
            let a = analytic.slices()[t][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            largest = largest.max(a.abs());
        }
    }
    Ok(GradCheck {
        max_relative_error: worst,
        max_abs_gradient: largest,
        parameters: count,
    })
}
