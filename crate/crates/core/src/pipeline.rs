//! End-to-end runs shared by the command line and the browser demo.

use std::time::Instant;

use rand::seq::SliceRandom;

use crate::community::{louvain_best_of, CommunityResult, Partition};
use crate::error::{AtlasError, Result};
use crate::features::FeatureOptions;
use crate::graph::Graph;
use crate::infotheory::{entropy, mutual_information, nmi};
use crate::model::{train, MlpConfig, MlpParams, TrainReport};
use crate::resolution::{adaptive_search, select_by_qmin, ResolutionProfile, SearchConfig, SearchOutcome};
use crate::rng::{derive_seed, resolution_seed, rng_from_seed};

/// One row of the NMI diagnostic table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmiRow {
    pub gamma: f64,
    pub modularity: f64,
    pub communities: usize,
    pub nmi: f64,
    pub mutual_information: f64,
    pub h_communities: f64,
    pub h_labels: f64,
}

impl NmiRow {
    pub const HEADER: &'static str = "#gamma\tQ\tK\tNMI\tI\tH_C\tH_L\tH_C+H_L";

    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{:.6}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            self.gamma,
            self.modularity,
            self.communities,
            self.nmi,
            self.mutual_information,
            self.h_communities,
            self.h_labels,
            self.h_communities + self.h_labels
        )
    }
}

pub fn nmi_row(r: &CommunityResult, labels: &Partition) -> Result<NmiRow> {
    Ok(NmiRow {
        gamma: r.gamma,
        modularity: r.modularity,
        communities: r.num_communities(),
        nmi: nmi(labels, &r.partition)?,
        mutual_information: mutual_information(labels, &r.partition)?,
        h_communities: entropy(&r.partition),
        h_labels: entropy(labels),
    })
}

/// Runs Louvain at every resolution in `gammas` and compares each partition with the labels.
pub fn nmi_curve(g: &Graph, labels: &[u32], gammas: &[f64], seed: u64, restarts: usize) -> Result<Vec<NmiRow>> {
    if labels.len() != g.num_nodes() {
        return Err(AtlasError::Shape(format!(
            "{} labels for {} nodes",
            labels.len(),
            g.num_nodes()
        )));
    }
    let labels = Partition::from_labels(labels);
    gammas
        .iter()
        .map(|&gamma| {
            let r = louvain_best_of(g, gamma, resolution_seed(seed, gamma), restarts)?;
            nmi_row(&r, &labels)
        })
        .collect()
}

/// NMI rows for the entries of an existing profile.
pub fn profile_nmi(profile: &ResolutionProfile, labels: &[u32]) -> Result<Vec<NmiRow>> {
    let labels = Partition::from_labels(labels);
    profile.entries().iter().map(|r| nmi_row(r, &labels)).collect()
}

/// `count` resolutions spaced evenly in log scale over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// A seeded permutation of `labels`.
pub fn shuffled_labels(labels: &[u32], seed: u64) -> Vec<u32> {
    let mut out = labels.to_vec();
    out.shuffle(&mut rng_from_seed(seed));
    out
}

/// Search (unless `communities` is false), then train.
pub struct RunOutcome {
    pub search: Option<SearchOutcome>,
    pub params: MlpParams,
    pub report: TrainReport,
}

pub fn run(
    g: &Graph,
    search: &SearchConfig,
    mlp: &MlpConfig,
    opts: FeatureOptions,
    communities: bool,
) -> Result<RunOutcome> {
    let start = Instant::now();
    let outcome = if communities {
        Some(adaptive_search(g, search)?)
    } else {
        None
    };
    let search_s = start.elapsed().as_secs_f64();
    let empty = ResolutionProfile::empty(search.clone());
    let profile = outcome.as_ref().map_or(&empty, |o| &o.profile);
    let (params, mut report) = train(g, profile, mlp, opts)?;
    report.timings.preprocessing_s += search_s;
    Ok(RunOutcome {
        search: outcome,
        params,
        report,
    })
}

/// Per-seed test metrics from independent runs. Each seed drives the
/// search, the initialization and the batch order.
pub fn run_seeds(
    g: &Graph,
    search: &SearchConfig,
    mlp: &MlpConfig,
    opts: FeatureOptions,
    communities: bool,
    seeds: &[u64],
) -> Result<Vec<TrainReport>> {
    seeds
        .iter()
        .map(|&seed| {
            let s = SearchConfig { seed, ..search.clone() };
            let m = MlpConfig { seed, ..mlp.clone() };
            run(g, &s, &m, opts, communities).map(|o| o.report)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub q_min: f64,
    /// Retained resolutions, one count per seed.
    pub resolutions: Vec<usize>,
    pub reports: Vec<TrainReport>,
}

impl SweepRow {
    pub fn test_metrics(&self) -> Vec<f64> {
        self.reports.iter().filter_map(|r| r.test_metric).collect()
    }
}

/// One search at `q_min = 0` per seed, then a filtered profile and a fresh
/// training run for every threshold. Louvain runs once per resolution.
pub fn sweep_qmin(
    g: &Graph,
    search: &SearchConfig,
    mlp: &MlpConfig,
    opts: FeatureOptions,
    q_mins: &[f64],
    seeds: &[u64],
) -> Result<Vec<SweepRow>> {
    let mut rows: Vec<SweepRow> = q_mins
        .iter()
        .map(|&q_min| SweepRow {
            q_min,
            resolutions: Vec::new(),
            reports: Vec::new(),
        })
        .collect();
    for &seed in seeds {
        let base = adaptive_search(
            g,
            &SearchConfig {
                q_min: 0.0,
                seed,
                ..search.clone()
            },
        )?;
        for row in &mut rows {
            let profile = select_by_qmin(&base.profile, row.q_min);
            row.resolutions.push(profile.len());
            let (_, report) = train(g, &profile, &MlpConfig { seed, ..mlp.clone() }, opts)?;
            row.reports.push(report);
        }
    }
    Ok(rows)
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// A derived seed for the `i`-th repetition of an experiment.
pub fn repetition_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, 0x5EED_0000 + i as u64)
}
