use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use atlas::community::louvain_best_of;
use atlas::features::FeatureOptions;
use atlas::graph::Graph;
use atlas::io::{write_checkpoint, write_profile, DatasetPaths};
use atlas::pipeline::{self, mean_std, NmiRow};
use atlas::resolution::{adaptive_search, ResolutionProfile, SearchOutcome};
use atlas::rng::{derive_seed, resolution_seed};
use atlas::synth::generate;
use atlas::AtlasError;

use crate::args::Command;
use crate::config::{ConfigError, RunConfig, Source};

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Data(String),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Data(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<AtlasError> for Failure {
    fn from(e: AtlasError) -> Self {
        let msg = e.to_string();
        match e {
            AtlasError::InvalidParameter(_) => Failure::Config(msg),
            AtlasError::Diverged(_) => Failure::Runtime(msg),
            _ if e.is_data_error() => Failure::Data(msg),
            AtlasError::Shape(_) => Failure::Data(msg),
            _ => Failure::Runtime(msg),
        }
    }
}

type Outcome = Result<(), Failure>;

pub fn dispatch(cmd: Command, cfg: &RunConfig) -> Outcome {
    fs::create_dir_all(&cfg.out).map_err(|e| Failure::Data(format!("cannot create {}: {e}", cfg.out.display())))?;
    let g = load(cfg)?;
    match cmd {
        Command::Communities => communities(&g, cfg),
        Command::Search => search(&g, cfg),
        Command::NmiCurve => nmi_curve(&g, cfg),
        Command::Train => train(&g, cfg),
        Command::SweepQmin => sweep_qmin(&g, cfg),
        Command::Bench => bench(&g, cfg),
    }
}

fn load(cfg: &RunConfig) -> Result<Graph, Failure> {
    match &cfg.source {
        Source::Dataset(dir) => Ok(DatasetPaths::in_dir(dir).load()?),
        Source::Synthetic(spec) => {
            let synth = generate(spec)?;
            for w in &synth.warnings {
                eprintln!("warning: {w}");
            }
            Ok(synth.graph)
        }
    }
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

fn opts(cfg: &RunConfig) -> FeatureOptions {
    FeatureOptions {
        standardize: cfg.standardize,
        ..FeatureOptions::with_nf(cfg.nf)
    }
}

fn profile_table(profile: &ResolutionProfile) -> String {
    let mut s = String::from("#gamma\tQ\tK\n");
    for r in profile.entries() {
        let _ = writeln!(s, "{}\t{:.6}\t{}", r.gamma, r.modularity, r.num_communities());
    }
    s
}

fn communities(g: &Graph, cfg: &RunConfig) -> Outcome {
    let gammas = match &cfg.search.explicit {
        Some(list) if !list.is_empty() => list,
        _ => {
            return Err(Failure::Config(
                "communities needs a resolution list (--resolutions g1,g2,...)".into(),
            ))
        }
    };
    let seed = cfg.seeds[0];
    let entries = gammas
        .iter()
        .map(|&gamma| louvain_best_of(g, gamma, resolution_seed(seed, gamma), cfg.search.restarts))
        .collect::<Result<Vec<_>, _>>()?;
    let profile = ResolutionProfile::new(entries, cfg.search.clone())?;
    write_profile(&cfg.out, &profile)?;
    print!("{}", profile_table(&profile));
    Ok(())
}

fn gap_table(outcome: &SearchOutcome) -> String {
    let profile = &outcome.profile;
    let mut s = String::from("#gamma_lo\tgamma_hi\tgap\n");
    let gammas = profile.gammas();
    for (w, gap) in gammas.windows(2).zip(profile.modularity_gaps()) {
        let _ = writeln!(s, "{}\t{}\t{:.6}", w[0], w[1], gap);
    }
    s
}

fn search(g: &Graph, cfg: &RunConfig) -> Outcome {
    let outcome = adaptive_search(g, &cfg.search)?;
    write_profile(&cfg.out, &outcome.profile)?;

    let mut steps = String::from("#step\tgamma\tQ\tK\tinterpolated\n");
    for (i, st) in outcome.steps.iter().enumerate() {
        let _ = writeln!(
            steps,
            "{}\t{}\t{:.6}\t{}\t{}",
            i + 1,
            st.gamma,
            st.modularity,
            st.communities,
            u8::from(st.interpolated)
        );
    }
    write(&cfg.out.join("search_steps.tsv"), &steps)?;
    write(&cfg.out.join("gaps.tsv"), &gap_table(&outcome))?;

    print!("{}", profile_table(&outcome.profile));
    let mean_gap = outcome.profile.mean_gap().map_or("nan".into(), |v| format!("{v:.6}"));
    println!(
        "# T={} evaluations={} mean_gap={} stop={:?}",
        outcome.profile.len(),
        outcome.steps.len(),
        mean_gap,
        outcome.stop
    );
    if outcome.profile.is_empty() {
        eprintln!("warning: no resolution reached q_min = {}", cfg.search.q_min);
    }
    if outcome.stalled() {
        eprintln!("warning: the search stalled; modularity stopped changing with the resolution");
    }
    Ok(())
}

fn nmi_curve(g: &Graph, cfg: &RunConfig) -> Outcome {
    let labels = g
        .labels()
        .ok_or_else(|| Failure::Data("nmi-curve needs node labels".into()))?;
    let seed = cfg.seeds[0];
    let labels = if cfg.shuffle_labels {
        pipeline::shuffled_labels(labels, derive_seed(seed, 0x5A0F))
    } else {
        labels.to_vec()
    };
    let rows = match cfg.grid {
        Some((lo, hi, count)) => {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Failure::Config(format!("grid needs 0 < lo <= hi, got {lo},{hi}")));
            }
            pipeline::nmi_curve(
                g,
                &labels,
                &pipeline::log_grid(lo, hi, count),
                seed,
                cfg.search.restarts,
            )?
        }
        None => pipeline::profile_nmi(&adaptive_search(g, &cfg.search)?.profile, &labels)?,
    };

    let mut table = format!("{}\n", NmiRow::HEADER);
    for r in &rows {
        let _ = writeln!(table, "{}", r.to_tsv());
    }
    write(&cfg.out.join("nmi_curve.tsv"), &table)?;
    print!("{table}");

    // Refinement makes I and H(C) grow with the resolution; real partitions
    // only approximately nest.
    let drops = |f: fn(&NmiRow) -> f64| rows.windows(2).filter(|w| f(&w[1]) < f(&w[0]) - 1e-6).count();
    let (di, dh) = (drops(|r| r.mutual_information), drops(|r| r.h_communities));
    if di + dh > 0 {
        eprintln!(
            "note: I decreases at {di} and H(C) at {dh} of {} steps",
            rows.len().saturating_sub(1)
        );
    }
    Ok(())
}

fn percent(values: &[f64]) -> String {
    let (m, s) = mean_std(values);
    format!("{:.2} ± {:.2}", 100.0 * m, 100.0 * s)
}

fn train(g: &Graph, cfg: &RunConfig) -> Outcome {
    let mut table = String::from("#seed\tT\tbest_epoch\tval\ttest\n");
    let mut timings = String::from("#seed\tpreprocessing_s\tper_epoch_s\tinference_s\n");
    let mut tests = Vec::new();
    let opt = |v: Option<f64>| v.map_or("nan".to_string(), |v| format!("{v:.6}"));
    for &seed in &cfg.seeds {
        let search = atlas::resolution::SearchConfig {
            seed,
            ..cfg.search.clone()
        };
        let mlp = atlas::model::MlpConfig {
            seed,
            ..cfg.mlp.clone()
        };
        let run = pipeline::run(g, &search, &mlp, opts(cfg), cfg.communities)?;
        let r = &run.report;
        let t = run.search.as_ref().map_or(0, |o| o.profile.len());
        if let Some(o) = &run.search {
            write_profile(&cfg.out.join(format!("profile_seed{seed}")), &o.profile)?;
        }
        write(&cfg.out.join(format!("train_seed{seed}.log")), &r.to_string())?;
        write(&cfg.out.join(format!("summary_seed{seed}.txt")), &r.summary())?;
        write_checkpoint(&cfg.out.join(format!("model_seed{seed}.atlf")), &run.params)?;
        let _ = writeln!(
            table,
            "{seed}\t{t}\t{}\t{}\t{}",
            r.best_epoch,
            opt(r.val_metric),
            opt(r.test_metric)
        );
        let _ = writeln!(
            timings,
            "{seed}\t{:.6}\t{:.6}\t{:.6}",
            r.timings.preprocessing_s, r.timings.per_epoch_s, r.timings.inference_s
        );
        tests.extend(r.test_metric);
    }
    write(&cfg.out.join("train.tsv"), &table)?;
    write(&cfg.out.join("timings.tsv"), &timings)?;
    print!("{table}");
    if tests.is_empty() {
        eprintln!("warning: the test split is empty; nothing to aggregate");
    } else {
        println!(
            "# test {} {} over {} seeds",
            cfg.mlp.metric,
            percent(&tests),
            tests.len()
        );
    }
    Ok(())
}

fn sweep_qmin(g: &Graph, cfg: &RunConfig) -> Outcome {
    let rows = pipeline::sweep_qmin(g, &cfg.search, &cfg.mlp, opts(cfg), &cfg.q_mins, &cfg.seeds)?;
    let mut table = String::from("#q_min\tT\tmean\tstd");
    for s in &cfg.seeds {
        let _ = write!(table, "\tseed{s}");
    }
    table.push('\n');
    for row in &rows {
        let metrics = row.test_metrics();
        let (m, s) = mean_std(&metrics);
        let t: Vec<String> = row.resolutions.iter().map(usize::to_string).collect();
        let _ = write!(table, "{}\t{}\t{:.6}\t{:.6}", row.q_min, t.join(","), m, s);
        for v in metrics {
            let _ = write!(table, "\t{v:.6}");
        }
        table.push('\n');
    }
    write(&cfg.out.join("sweep_qmin.tsv"), &table)?;
    print!("{table}");
    Ok(())
}

pub const MIN_REPETITIONS: usize = 5;

fn bench(g: &Graph, cfg: &RunConfig) -> Outcome {
    if cfg.repetitions < MIN_REPETITIONS {
        return Err(Failure::Config(format!(
            "bench needs at least {MIN_REPETITIONS} repetitions, got {}",
            cfg.repetitions
        )));
    }
    let mut runs = String::from("#repetition\tpreprocessing_s\tper_epoch_s\tinference_s\n");
    let mut cols: [Vec<f64>; 3] = Default::default();
    for i in 0..cfg.repetitions {
        let run = pipeline::run(g, &cfg.search, &cfg.mlp, opts(cfg), cfg.communities)?;
        let t = run.report.timings;
        let _ = writeln!(
            runs,
            "{}\t{:.6}\t{:.6}\t{:.6}",
            i + 1,
            t.preprocessing_s,
            t.per_epoch_s,
            t.inference_s
        );
        cols[0].push(t.preprocessing_s);
        cols[1].push(t.per_epoch_s);
        cols[2].push(t.inference_s);
    }
    let cells: Vec<String> = cols
        .iter()
        .map(|c| {
            let (m, s) = mean_std(c);
            format!("{m:.6}±{s:.6}")
        })
        .collect();
    let table = format!("#preprocessing_s\tper_epoch_s\tinference_s\n{}\n", cells.join("\t"));
    write(&cfg.out.join("bench_runs.tsv"), &runs)?;
    write(&cfg.out.join("bench.tsv"), &table)?;
    print!("{table}");
    Ok(())
}
