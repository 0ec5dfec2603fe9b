//! The classifier network and its backward pass.
//!
//! Hidden layers are `Linear → LayerNorm → GELU → Dropout`; the last layer is
//! a plain affine map to class logits. The first layer reads the design
//! `[X ‖ E⁽γ₁⁾ ‖ …]` without materializing it: feature rows are gathered (or
//! read sparsely) and the community blocks are looked up in the projection
//! matrices, which receive gradients like any other parameter.

use ndarray::{s, Array1, Array2, Axis, Zip};
use rand::Rng as _;

use crate::error::{AtlasError, Result};
use crate::features::{DesignSource, ProjectionParams};
use crate::rng::Rng;

pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `fan_in × fan_out`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub scale: Array1<f64>,
    pub shift: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub projections: ProjectionParams,
    /// `L` affine layers.
    pub layers: Vec<Dense>,
    /// `L − 1` normalizations, one per hidden layer.
    pub norms: Vec<LayerNorm>,
}

/// Shape of a network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub base_width: usize,
    pub block_counts: Vec<usize>,
    pub community_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub classes: usize,
}

impl Architecture {
    pub fn input_width(&self) -> usize {
        self.base_width + self.block_counts.len() * self.community_dim
    }
}

impl MlpParams {
    /// Affine weights and biases uniform in `±1/√fan_in`; LayerNorm scale 1,
    /// shift 0; projections uniform in `±1/√k_γ`.
    pub fn init(arch: &Architecture, rng: &mut Rng) -> Result<Self> {
        if arch.layers == 0 {
            return Err(AtlasError::InvalidParameter("network needs at least one layer".into()));
        }
        if arch.classes == 0 {
            return Err(AtlasError::InvalidParameter("network needs at least one output".into()));
        }
        let projections = ProjectionParams::init(&arch.block_counts, arch.community_dim, rng);
        let mut widths = vec![arch.input_width()];
        widths.extend(std::iter::repeat_n(arch.hidden, arch.layers - 1));
        widths.push(arch.classes);
        let layers = widths
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0].max(1) as f64).sqrt();
                let weight = Array2::from_shape_simple_fn((w[0], w[1]), || rng.random_range(-bound..=bound));
                let bias = Array1::from_shape_simple_fn(w[1], || rng.random_range(-bound..=bound));
                Dense { weight, bias }
            })
            .collect();
        let norms = (0..arch.layers - 1)
            .map(|_| LayerNorm {
                scale: Array1::ones(arch.hidden),
                shift: Array1::zeros(arch.hidden),
            })
            .collect();
        Ok(MlpParams {
            projections,
            layers,
            norms,
        })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weight.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.bias.len())
    }

    pub fn num_parameters(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for s in z.slices_mut() {
            s.fill(0.0);
        }
        z
    }

    /// Every parameter tensor as a flat slice, in a fixed order.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for m in self.projections.matrices() {
            out.push(m.as_slice().expect("standard layout"));
        }
        for l in &self.layers {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        for n in &self.norms {
            out.push(n.scale.as_slice().expect("standard layout"));
            out.push(n.shift.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for m in self.projections.matrices_mut() {
            out.push(m.as_slice_mut().expect("standard layout"));
        }
        for l in &mut self.layers {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        for n in &mut self.norms {
            out.push(n.scale.as_slice_mut().expect("standard layout"));
            out.push(n.shift.as_slice_mut().expect("standard layout"));
        }
        out
    }

    fn check_source(&self, source: &DesignSource) -> Result<()> {
        let expected = source.base_width() + source.assignments().len() * self.projections.dim();
        if self.input_width() != expected {
            return Err(AtlasError::Shape(format!(
                "network expects input width {}, design has width {expected}",
                self.input_width()
            )));
        }
        if self.projections.len() != source.assignments().len() {
            return Err(AtlasError::Shape(format!(
                "{} projection matrices for {} resolutions",
                self.projections.len(),
                source.assignments().len()
            )));
        }
        for (w, p) in self.projections.matrices().iter().zip(source.assignments()) {
            if w.nrows() != p.num_blocks() {
                return Err(AtlasError::Shape(format!(
                    "projection has {} rows, partition has {} blocks",
                    w.nrows(),
                    p.num_blocks()
                )));
            }
        }
        Ok(())
    }
}

pub enum Mode<'r> {
    Eval,
    /// Inverted dropout with rate `dropout` drawn from `rng`.
    Train {
        dropout: f64,
        rng: &'r mut Rng,
    },
}

struct HiddenCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
    pre_gelu: Array2<f64>,
    /// Per-element dropout multiplier (0 or `1/(1−p)`).
    mask: Option<Array2<f64>>,
}

pub(crate) struct Cache {
    base_rows: Option<Array2<f64>>,
    community: Array2<f64>,
    hidden: Vec<HiddenCache>,
    /// Inputs of layers `1..L`.
    inputs: Vec<Array2<f64>>,
}

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

pub fn gelu_grad(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2));
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    cdf + x * pdf
}

/// Logits for `rows` of `source`.
pub fn forward(params: &MlpParams, source: &DesignSource, rows: &[usize], mode: Mode<'_>) -> Result<Array2<f64>> {
    forward_cached(params, source, rows, mode).map(|(z, _)| z)
}

pub(crate) fn forward_cached(
    params: &MlpParams,
    source: &DesignSource,
    rows: &[usize],
    mut mode: Mode<'_>,
) -> Result<(Array2<f64>, Cache)> {
    params.check_source(source)?;
    let b = rows.len();
    let dim = params.projections.dim();
    let base_w = source.base_width();
    let first = &params.layers[0];

    let mut z = Array2::zeros((b, first.bias.len()));
    let base_rows = match source.base_sparse() {
        Some(sp) => {
            for (r, &node) in rows.iter().enumerate() {
                let mut zr = z.row_mut(r);
                for (j, v) in sp.row(node) {
                    zr.scaled_add(v, &first.weight.row(j));
                }
            }
            None
        }
        None => {
            let xb = source.base().select(Axis(0), rows);
            z += &xb.dot(&first.weight.slice(s![..base_w, ..]));
            Some(xb)
        }
    };
    let t_count = source.assignments().len();
    let mut community = Array2::zeros((b, t_count * dim));
    for (t, (p, w)) in source
        .assignments()
        .iter()
        .zip(params.projections.matrices())
        .enumerate()
    {
        for (r, &node) in rows.iter().enumerate() {
            community
                .slice_mut(s![r, t * dim..(t + 1) * dim])
                .assign(&w.row(p.block_of(node)));
        }
    }
    if t_count > 0 {
        z += &community.dot(&first.weight.slice(s![base_w.., ..]));
    }
    z += &first.bias;

    let mut hidden = Vec::with_capacity(params.norms.len());
    let mut inputs = Vec::with_capacity(params.norms.len());
    for (l, norm) in params.norms.iter().enumerate() {
        let (xhat, inv_std) = normalize_rows(&z);
        let pre_gelu = &xhat * &norm.scale + &norm.shift;
        let mut act = pre_gelu.mapv(gelu);
        let mask = match &mut mode {
            Mode::Train { dropout, rng } if *dropout > 0.0 => {
                let keep = 1.0 / (1.0 - *dropout);
                let m =
                    Array2::from_shape_simple_fn(act.dim(), || if rng.random::<f64>() < *dropout { 0.0 } else { keep });
                act *= &m;
                Some(m)
            }
            _ => None,
        };
        hidden.push(HiddenCache {
            xhat,
            inv_std,
            pre_gelu,
            mask,
        });
        let next = &params.layers[l + 1];
        z = act.dot(&next.weight) + &next.bias;
        inputs.push(act);
    }

    Ok((
        z,
        Cache {
            base_rows,
            community,
            hidden,
            inputs,
        },
    ))
}

/// Per-row standardization; returns `(x̂, 1/σ)`.
fn normalize_rows(z: &Array2<f64>) -> (Array2<f64>, Array1<f64>) {
    let width = z.ncols() as f64;
    let mut xhat = z.clone();
    let mut inv_std = Array1::zeros(z.nrows());
    for (mut row, s) in xhat.rows_mut().into_iter().zip(inv_std.iter_mut()) {
        let mean = row.sum() / width;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / width;
        let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        row.mapv_inplace(|v| (v - mean) * inv);
        *s = inv;
    }
    (xhat, inv_std)
}

/// Gradients of the loss with respect to every parameter, given the
/// gradient `dlogits` with respect to the logits of the cached pass.
pub(crate) fn backward(
    params: &MlpParams,
    source: &DesignSource,
    rows: &[usize],
    cache: &Cache,
    dlogits: Array2<f64>,
) -> MlpParams {
    let mut grads = params.zeros_like();
    let mut delta = dlogits;
    for l in (1..params.layers.len()).rev() {
        let input = &cache.inputs[l - 1];
        grads.layers[l].weight = input.t().dot(&delta);
        grads.layers[l].bias = delta.sum_axis(Axis(0));
        let mut da = delta.dot(&params.layers[l].weight.t());

        let hc = &cache.hidden[l - 1];
        if let Some(mask) = &hc.mask {
            da *= mask;
        }
        Zip::from(&mut da)
            .and(&hc.pre_gelu)
            .for_each(|d, &y| *d *= gelu_grad(y));

        let norm = &params.norms[l - 1];
        grads.norms[l - 1].scale = (&da * &hc.xhat).sum_axis(Axis(0));
        grads.norms[l - 1].shift = da.sum_axis(Axis(0));
        let dxhat = da * &norm.scale;
        let width = dxhat.ncols() as f64;
        let mut dz = Array2::zeros(dxhat.dim());
        for r in 0..dxhat.nrows() {
            let dr = dxhat.row(r);
            let xr = hc.xhat.row(r);
            let mean_d = dr.sum() / width;
            let mean_dx = dr.dot(&xr) / width;
            let inv = hc.inv_std[r];
            Zip::from(dz.row_mut(r))
                .and(&dr)
                .and(&xr)
                .for_each(|o, &d, &x| *o = inv * (d - mean_d - x * mean_dx));
        }
        delta = dz;
    }

    let base_w = source.base_width();
    let dim = params.projections.dim();
    let first = &params.layers[0];
    grads.layers[0].bias = delta.sum_axis(Axis(0));
    {
        let gw = &mut grads.layers[0].weight;
        match (&cache.base_rows, source.base_sparse()) {
            (Some(xb), _) => {
                gw.slice_mut(s![..base_w, ..]).assign(&xb.t().dot(&delta));
            }
            (None, Some(sp)) => {
                for (r, &node) in rows.iter().enumerate() {
                    let dr = delta.row(r);
                    for (j, v) in sp.row(node) {
                        gw.row_mut(j).scaled_add(v, &dr);
                    }
                }
            }
            (None, None) => unreachable!("forward caches dense rows when no sparse copy exists"),
        }
        if !source.assignments().is_empty() {
            gw.slice_mut(s![base_w.., ..]).assign(&cache.community.t().dot(&delta));
        }
    }
    if !source.assignments().is_empty() {
        let de = delta.dot(&first.weight.slice(s![base_w.., ..]).t());
        for (t, (p, gproj)) in source
            .assignments()
            .iter()
            .zip(grads.projections.matrices_mut())
            .enumerate()
        {
            for (r, &node) in rows.iter().enumerate() {
                gproj
                    .row_mut(p.block_of(node))
                    .scaled_add(1.0, &de.slice(s![r, t * dim..(t + 1) * dim]));
            }
        }
    }
    grads
}
