//! Adaptive resolution search: evaluate Louvain at a growing set of
//! resolutions, interpolating where modularity jumps by more than
//! `delta_max` and extrapolating toward a random modularity drop otherwise,
//! until the finest resolution falls to `q_min`.

use rand::Rng as _;

use crate::community::{check_gamma, louvain_best_of, CommunityResult};
use crate::error::{AtlasError, Result};
use crate::graph::Graph;
use crate::rng::{derive_seed, resolution_seed, rng_from_seed};

/// Resolutions evaluated before the search loop starts.
pub const INITIAL_RESOLUTIONS: [f64; 2] = [0.5, 1.0];

/// Slopes smaller than this in magnitude stall extrapolation.
pub const MIN_SLOPE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Minimum modularity a resolution needs to be retained.
    pub q_min: f64,
    /// Largest modularity gap tolerated between consecutive resolutions.
    pub delta_max: f64,
    /// Range `[a, b]` of the random modularity drop targeted when extrapolating.
    pub gap_range: (f64, f64),
    pub max_iterations: usize,
    pub seed: u64,
    /// Louvain passes per resolution; the best modularity is kept.
    pub restarts: usize,
    /// When set, these resolutions are evaluated as-is and the search is skipped.
    pub explicit: Option<Vec<f64>>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            q_min: 0.1,
            delta_max: 0.2,
            gap_range: (0.03, 0.08),
            max_iterations: 50,
            seed: 0,
            restarts: 1,
            explicit: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(AtlasError::InvalidParameter(msg));
        if !(0.0..=1.0).contains(&self.q_min) {
            return bad(format!("q_min must lie in [0, 1], got {}", self.q_min));
        }
        if !(self.delta_max > 0.0 && self.delta_max.is_finite()) {
            return bad(format!("delta_max must be positive, got {}", self.delta_max));
        }
        let (a, b) = self.gap_range;
        if !(a > 0.0 && a <= b && b.is_finite()) {
            return bad(format!("gap range must satisfy 0 < a <= b, got [{a}, {b}]"));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive".into());
        }
        if self.restarts == 0 {
            return bad("restarts must be positive".into());
        }
        if let Some(list) = &self.explicit {
            if list.is_empty() {
                return bad("explicit resolution list is empty".into());
            }
            for &g in list {
                check_gamma(g)?;
            }
        }
        Ok(())
    }
}

/// Retained resolutions, sorted by ascending gamma.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionProfile {
    entries: Vec<CommunityResult>,
    config: SearchConfig,
}

impl ResolutionProfile {
    /// Sorts `entries` by gamma and rejects duplicate resolutions.
    pub fn new(mut entries: Vec<CommunityResult>, config: SearchConfig) -> Result<Self> {
        entries.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
        if entries.windows(2).any(|w| w[0].gamma == w[1].gamma) {
            return Err(AtlasError::InvalidParameter(
                "profile contains a repeated resolution".into(),
            ));
        }
        Ok(ResolutionProfile { entries, config })
    }

    pub fn empty(config: SearchConfig) -> Self {
        ResolutionProfile {
            entries: Vec::new(),
            config,
        }
    }

    pub fn entries(&self) -> &[CommunityResult] {
        &self.entries
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.gamma).collect()
    }

    /// `|Q(γ_{t+1}) − Q(γ_t)|` for consecutive retained resolutions.
    pub fn modularity_gaps(&self) -> Vec<f64> {
        self.entries
            .windows(2)
            .map(|w| (w[1].modularity - w[0].modularity).abs())
            .collect()
    }

    /// Mean modularity gap, `None` with fewer than two entries.
    pub fn mean_gap(&self) -> Option<f64> {
        let gaps = self.modularity_gaps();
        (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
    }
}

/// Keeps the entries with `Q ≥ q_min`; Louvain is not re-run.
pub fn select_by_qmin(profile: &ResolutionProfile, q_min: f64) -> ResolutionProfile {
    ResolutionProfile {
        entries: profile
            .entries
            .iter()
            .filter(|e| e.modularity >= q_min)
            .cloned()
            .collect(),
        config: SearchConfig {
            q_min,
            ..profile.config.clone()
        },
    }
}

/// Finite-difference slope of Q against gamma over the two largest gammas.
pub fn estimate_slope(history: &[(f64, f64)]) -> Result<f64> {
    if history.len() < 2 {
        return Err(AtlasError::InvalidParameter(
            "slope estimate needs at least two points".into(),
        ));
    }
    let mut pts = history.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (g1, q1) = pts[pts.len() - 2];
    let (g2, q2) = pts[pts.len() - 1];
    if g2 == g1 {
        return Err(AtlasError::InvalidParameter(
            "slope estimate needs distinct resolutions".into(),
        ));
    }
    Ok((q2 - q1) / (g2 - g1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Modularity at the largest resolution reached `q_min`.
    BelowMinimum,
    /// Extrapolation slope vanished with no interpolation pending.
    Stalled,
    MaxIterations,
    /// Resolutions were given explicitly.
    Explicit,
}

/// One Louvain evaluation during the search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchStep {
    pub gamma: f64,
    pub modularity: f64,
    pub communities: usize,
    pub interpolated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub profile: ResolutionProfile,
    /// Every resolution evaluated, in evaluation order.
    pub steps: Vec<SearchStep>,
    pub stop: StopReason,
    pub duplicates_skipped: usize,
}

impl SearchOutcome {
    pub fn stalled(&self) -> bool {
        self.stop == StopReason::Stalled
    }
}

/// Runs the adaptive search (or the explicit resolution list) on `g`.
pub fn adaptive_search(g: &Graph, cfg: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    if g.num_nodes() < 2 || g.num_edges() == 0 {
        return Err(AtlasError::Data(
            "resolution search needs at least two nodes and one edge".into(),
        ));
    }
    let run = |gamma: f64| louvain_best_of(g, gamma, resolution_seed(cfg.seed, gamma), cfg.restarts);

    if let Some(list) = &cfg.explicit {
        let mut entries: Vec<CommunityResult> = Vec::new();
        let mut steps = Vec::new();
        let mut duplicates = 0;
        for &gamma in list {
            if entries.iter().any(|e| e.gamma == gamma) {
                duplicates += 1;
                continue;
            }
            let r = run(gamma)?;
            steps.push(step_of(&r, false));
            entries.push(r);
        }
        return Ok(SearchOutcome {
            profile: ResolutionProfile::new(entries, cfg.clone())?,
            steps,
            stop: StopReason::Explicit,
            duplicates_skipped: duplicates,
        });
    }

    let mut drop_rng = rng_from_seed(derive_seed(cfg.seed, 0xD50F));
    let mut tested: Vec<CommunityResult> = Vec::new();
    let mut steps = Vec::new();
    for gamma in INITIAL_RESOLUTIONS {
        let r = run(gamma)?;
        steps.push(step_of(&r, false));
        tested.push(r);
    }

    let mut duplicates = 0;
    let mut iterations = 0;
    let stop = loop {
        if iterations >= cfg.max_iterations {
            break StopReason::MaxIterations;
        }
        let last = tested.last().expect("initial resolutions evaluated");
        let (gamma_max, tau) = (last.gamma, last.modularity);
        if tau <= cfg.q_min {
            break StopReason::BelowMinimum;
        }
        iterations += 1;

        let interpolate = tested
            .windows(2)
            .find(|w| (w[1].modularity - w[0].modularity).abs() > cfg.delta_max)
            .map(|w| (w[0].gamma + w[1].gamma) / 2.0);
        let (proposal, interpolated) = match interpolate {
            Some(mid) => (mid, true),
            None => {
                let (a, b) = cfg.gap_range;
                let drop = if a == b { a } else { drop_rng.random_range(a..=b) };
                let target = tau - drop;
                let history: Vec<(f64, f64)> = tested.iter().map(|e| (e.gamma, e.modularity)).collect();
                let slope = estimate_slope(&history)?;
                if slope.abs() < MIN_SLOPE {
                    break StopReason::Stalled;
                }
                // Step forward even when noise makes the local slope positive.
                (gamma_max + (target - tau) / -slope.abs(), false)
            }
        };
        if !(proposal > 0.0 && proposal.is_finite()) {
            break StopReason::Stalled;
        }
        let pos = tested.partition_point(|e| e.gamma < proposal);
        if tested.get(pos).is_some_and(|e| e.gamma == proposal) {
            duplicates += 1;
            continue;
        }
        let r = run(proposal)?;
        steps.push(step_of(&r, interpolated));
        tested.insert(pos, r);
    };

    let retained: Vec<CommunityResult> = tested.into_iter().filter(|e| e.modularity >= cfg.q_min).collect();
    Ok(SearchOutcome {
        profile: ResolutionProfile::new(retained, cfg.clone())?,
        steps,
        stop,
        duplicates_skipped: duplicates,
    })
}

fn step_of(r: &CommunityResult, interpolated: bool) -> SearchStep {
    SearchStep {
        gamma: r.gamma,
        modularity: r.modularity,
        communities: r.num_communities(),
        interpolated,
    }
}
