//! Browser bindings for the demo page in `www/`. Every export takes plain
//! numbers or strings and returns a JSON document.

use atlas::community::Partition;
use atlas::infotheory::refinement_report;
use atlas::pipeline::{log_grid, nmi_curve};
use atlas::resolution::{adaptive_search, SearchConfig};
use atlas::synth::{generate, SbmSpec};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest graph the page may request; keeps the tab responsive.
pub const MAX_NODES: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraphParams {
    pub n: usize,
    pub blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub alignment: f64,
    pub seed: u64,
}

impl GraphParams {
    fn spec(&self) -> Result<SbmSpec, String> {
        if self.n > MAX_NODES {
            return Err(format!("at most {MAX_NODES} nodes in the browser"));
        }
        Ok(SbmSpec {
            n: self.n,
            blocks: self.blocks,
            p_in: self.p_in,
            p_out: self.p_out,
            alignment: self.alignment,
            feature_dim: self.blocks,
            seed: self.seed,
            ..Default::default()
        })
    }
}

#[derive(Serialize)]
struct CurvePoint {
    gamma: f64,
    modularity: f64,
    communities: usize,
    nmi: f64,
    mutual_information: f64,
    h_communities: f64,
    h_labels: f64,
}

#[derive(Serialize)]
struct Curve {
    nodes: usize,
    edges: usize,
    points: Vec<CurvePoint>,
}

pub fn curve_json(params: GraphParams, lo: f64, hi: f64, count: usize) -> Result<String, String> {
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) || count == 0 || count > 64 {
        return Err("need 0 < lo <= hi and 1 to 64 points".into());
    }
    let g = generate(&params.spec()?).map_err(|e| e.to_string())?.graph;
    let labels = g.labels().expect("synthetic graphs are labeled");
    let rows = nmi_curve(&g, labels, &log_grid(lo, hi, count), params.seed, 1).map_err(|e| e.to_string())?;
    let curve = Curve {
        nodes: g.num_nodes(),
        edges: g.num_edges(),
        points: rows
            .into_iter()
            .map(|r| CurvePoint {
                gamma: r.gamma,
                modularity: r.modularity,
                communities: r.communities,
                nmi: r.nmi,
                mutual_information: r.mutual_information,
                h_communities: r.h_communities,
                h_labels: r.h_labels,
            })
            .collect(),
    };
    serde_json::to_string(&curve).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Step {
    gamma: f64,
    modularity: f64,
    communities: usize,
    interpolated: bool,
    retained: bool,
}

#[derive(Serialize)]
struct Search {
    steps: Vec<Step>,
    retained: usize,
    mean_gap: Option<f64>,
    stop: String,
}

pub fn search_json(
    params: GraphParams,
    q_min: f64,
    delta_max: f64,
    gap_lo: f64,
    gap_hi: f64,
) -> Result<String, String> {
    let g = generate(&params.spec()?).map_err(|e| e.to_string())?.graph;
    let cfg = SearchConfig {
        q_min,
        delta_max,
        gap_range: (gap_lo, gap_hi),
        seed: params.seed,
        ..Default::default()
    };
    let out = adaptive_search(&g, &cfg).map_err(|e| e.to_string())?;
    let kept = out.profile.gammas();
    let search = Search {
        steps: out
            .steps
            .iter()
            .map(|s| Step {
                gamma: s.gamma,
                modularity: s.modularity,
                communities: s.communities,
                interpolated: s.interpolated,
                retained: kept.contains(&s.gamma),
            })
            .collect(),
        retained: out.profile.len(),
        mean_gap: out.profile.mean_gap(),
        stop: format!("{:?}", out.stop),
    };
    serde_json::to_string(&search).map_err(|e| e.to_string())
}

fn parse_partition(name: &str, text: &str) -> Result<Partition, String> {
    let labels = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u32>().map_err(|_| format!("{name}: '{t}' is not a block id")))
        .collect::<Result<Vec<_>, _>>()?;
    if labels.is_empty() {
        return Err(format!("{name} is empty"));
    }
    Ok(Partition::from_labels(&labels))
}

#[derive(Serialize)]
struct Refinement {
    delta_mi: f64,
    delta_h: f64,
    gain_per_entropy: f64,
    threshold: f64,
    nmi_before: f64,
    nmi_after: f64,
    predicted_increase: bool,
    actual_increase: bool,
}

pub fn refinement_json(labels: &str, coarse: &str, refined: &str) -> Result<String, String> {
    let y = parse_partition("labels", labels)?;
    let p = parse_partition("coarse partition", coarse)?;
    let s = parse_partition("refined partition", refined)?;
    let r = refinement_report(&y, &p, &s).map_err(|e| e.to_string())?;
    serde_json::to_string(&Refinement {
        delta_mi: r.delta_mi,
        delta_h: r.delta_h,
        gain_per_entropy: r.gain_per_entropy,
        threshold: r.threshold,
        nmi_before: r.nmi_before,
        nmi_after: r.nmi_after,
        predicted_increase: r.predicted_increase,
        actual_increase: r.actual_increase,
    })
    .map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// NMI, mutual information and entropies over a log grid of resolutions.
#[wasm_bindgen(js_name = nmiCurve)]
#[allow(clippy::too_many_arguments)]
pub fn nmi_curve_js(
    n: usize,
    blocks: usize,
    p_in: f64,
    p_out: f64,
    alignment: f64,
    seed: u32,
    lo: f64,
    hi: f64,
    count: usize,
) -> Result<String, JsError> {
    let params = GraphParams {
        n,
        blocks,
        p_in,
        p_out,
        alignment,
        seed: seed.into(),
    };
    js(curve_json(params, lo, hi, count))
}

/// Every Louvain evaluation of the adaptive search, marked retained or not.
#[wasm_bindgen(js_name = searchProfile)]
#[allow(clippy::too_many_arguments)]
pub fn search_profile_js(
    n: usize,
    blocks: usize,
    p_in: f64,
    p_out: f64,
    seed: u32,
    q_min: f64,
    delta_max: f64,
    gap_lo: f64,
    gap_hi: f64,
) -> Result<String, JsError> {
    let params = GraphParams {
        n,
        blocks,
        p_in,
        p_out,
        alignment: 1.0,
        seed: seed.into(),
    };
    js(search_json(params, q_min, delta_max, gap_lo, gap_hi))
}

/// Information gain of refining one partition into another.
#[wasm_bindgen(js_name = refinement)]
pub fn refinement_js(labels: &str, coarse: &str, refined: &str) -> Result<String, JsError> {
    js(refinement_json(labels, coarse, refined))
}
