//! The run configuration: a flat `key = value` file overlaid by flags.
//!
//! ```text
//! # Cora
//! data = data/cora
//! q_min = 0.1
//! delta_q = 0.2
//! epochs = 200
//! batch = 128
//! hidden = 256
//! layers = 3
//! dropout = 0.5
//! lr = 1e-4
//! d_c = 16
//! seeds = 0,1,2,3,4,5,6,7,8,9
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use atlas::model::{Metric, MlpConfig};
use atlas::resolution::SearchConfig;
use atlas::synth::SbmSpec;

use crate::args::Overrides;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Where the graph comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Dataset(PathBuf),
    Synthetic(SbmSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: Source,
    pub search: SearchConfig,
    pub mlp: MlpConfig,
    pub nf: bool,
    pub standardize: bool,
    pub communities: bool,
    pub out: PathBuf,
    pub seeds: Vec<u64>,
    /// Thresholds for `sweep-qmin`, in the order given.
    pub q_mins: Vec<f64>,
    /// `(lo, hi, count)` log-spaced resolutions for `nmi-curve`.
    pub grid: Option<(f64, f64, usize)>,
    pub shuffle_labels: bool,
    pub repetitions: usize,
}

const KEYS: &[&str] = &[
    "data",
    "synth",
    "synth.n",
    "synth.blocks",
    "synth.p_in",
    "synth.p_out",
    "synth.alignment",
    "synth.feature_dim",
    "synth.feature_signal",
    "synth.feature_noise",
    "synth.seed",
    "q_min",
    "delta_q",
    "gap_range",
    "max_iterations",
    "restarts",
    "resolutions",
    "epochs",
    "batch",
    "hidden",
    "layers",
    "dropout",
    "lr",
    "metric",
    "d_c",
    "nf",
    "standardize",
    "communities",
    "seed",
    "seeds",
    "q_mins",
    "grid",
    "shuffle_labels",
    "repetitions",
    "out",
];

/// Parsed `key = value` pairs with the line each came from.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    path: PathBuf,
    values: BTreeMap<String, (String, usize)>,
}

impl ConfigFile {
    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return config_err(format!("{}:{}: expected key = value", path.display(), i + 1));
            };
            let key = key.trim().to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                return config_err(format!("{}:{}: unknown key '{key}'", path.display(), i + 1));
            }
            if values.insert(key.clone(), (value.trim().to_string(), i + 1)).is_some() {
                return config_err(format!("{}:{}: '{key}' is set twice", path.display(), i + 1));
            }
        }
        Ok(ConfigFile {
            path: path.to_path_buf(),
            values,
        })
    }

    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.values.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|_| ConfigError(format!("{}:{line}: bad value '{v}' for {key}", self.path.display()))),
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => parse_list(v)
                .map(Some)
                .map_err(|_| ConfigError(format!("{}:{line}: bad list '{v}' for {key}", self.path.display()))),
        }
    }

    fn has_synth(&self) -> bool {
        self.values.keys().any(|k| k.starts_with("synth"))
    }
}

pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, T::Err> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => config_err(format!("bad boolean '{v}' for {key}")),
    }
}

fn pair(key: &str, v: &[f64]) -> Result<(f64, f64), ConfigError> {
    match v {
        [a, b] => Ok((*a, *b)),
        _ => config_err(format!("{key} takes two values, got {}", v.len())),
    }
}

/// Sweep thresholds 1.0, 0.9, …, 0.0.
pub fn default_q_mins() -> Vec<f64> {
    (0..=10).rev().map(|i| i as f64 / 10.0).collect()
}

impl RunConfig {
    /// Defaults, then the file, then the flags.
    pub fn resolve(file: &ConfigFile, flags: &Overrides) -> Result<Self, ConfigError> {
        let source = resolve_source(file, flags)?;

        let mut search = SearchConfig::default();
        if let Some(v) = file.get("q_min")? {
            search.q_min = v;
        }
        if let Some(v) = file.get("delta_q")? {
            search.delta_max = v;
        }
        if let Some(v) = file.list::<f64>("gap_range")? {
            search.gap_range = pair("gap_range", &v)?;
        }
        if let Some(v) = file.get("max_iterations")? {
            search.max_iterations = v;
        }
        if let Some(v) = file.get("restarts")? {
            search.restarts = v;
        }
        search.explicit = file.list("resolutions")?;

        let mut mlp = MlpConfig::default();
        if let Some(v) = file.get("epochs")? {
            mlp.epochs = v;
        }
        if let Some(v) = file.get("batch")? {
            mlp.batch = v;
        }
        if let Some(v) = file.get("hidden")? {
            mlp.hidden = v;
        }
        if let Some(v) = file.get("layers")? {
            mlp.layers = v;
        }
        if let Some(v) = file.get("dropout")? {
            mlp.dropout = v;
        }
        if let Some(v) = file.get("lr")? {
            mlp.lr = v;
        }
        if let Some(v) = file.get("d_c")? {
            mlp.community_dim = v;
        }
        if let Some((v, _)) = file.raw("metric") {
            mlp.metric = Metric::parse(v).ok_or_else(|| ConfigError(format!("unknown metric '{v}'")))?;
        }

        let flag_bool = |key: &str| -> Result<Option<bool>, ConfigError> {
            file.raw(key).map(|(v, _)| parse_bool(key, v)).transpose()
        };
        let mut nf = flag_bool("nf")?.unwrap_or(false);
        let mut standardize = flag_bool("standardize")?.unwrap_or(false);
        let mut communities = flag_bool("communities")?.unwrap_or(true);
        let mut shuffle_labels = flag_bool("shuffle_labels")?.unwrap_or(false);

        let mut seeds = match (file.list::<u64>("seeds")?, file.get::<u64>("seed")?) {
            (Some(_), Some(_)) => return config_err("set either seed or seeds, not both"),
            (Some(s), None) => s,
            (None, Some(s)) => vec![s],
            (None, None) => vec![0],
        };
        let mut q_mins = file.list("q_mins")?.unwrap_or_else(default_q_mins);
        let mut grid = match file.list::<f64>("grid")? {
            None => None,
            Some(v) => match v[..] {
                [lo, hi, count] if count >= 1.0 && count.fract() == 0.0 => Some((lo, hi, count as usize)),
                _ => return config_err("grid takes lo,hi,count"),
            },
        };
        let mut repetitions = file.get("repetitions")?.unwrap_or(5);
        let mut out = file
            .get::<PathBuf>("out")?
            .unwrap_or_else(|| PathBuf::from("atlas-out"));

        // Flags win over the file.
        if let Some(s) = flags.seed {
            seeds = vec![s];
        }
        if let Some(s) = &flags.seeds {
            seeds = s.clone();
        }
        if let Some(v) = flags.qmin {
            search.q_min = v;
        }
        if let Some(v) = flags.delta_max {
            search.delta_max = v;
        }
        if let Some(v) = &flags.gap_range {
            search.gap_range = pair("--gap-range", v)?;
        }
        if let Some(v) = &flags.resolutions {
            search.explicit = Some(v.clone());
        }
        if let Some(v) = flags.dc {
            mlp.community_dim = v;
        }
        if let Some(v) = flags.epochs {
            mlp.epochs = v;
        }
        if let Some(v) = flags.restarts {
            search.restarts = v;
        }
        nf |= flags.nf;
        standardize |= flags.standardize;
        communities &= !flags.no_communities;
        shuffle_labels |= flags.shuffle_labels;
        if let Some(v) = &flags.q_mins {
            q_mins = v.clone();
        }
        if let Some(v) = &flags.grid {
            grid = match v[..] {
                [lo, hi, count] if count >= 1.0 && count.fract() == 0.0 => Some((lo, hi, count as usize)),
                _ => return config_err("--grid takes lo,hi,count"),
            };
        }
        if let Some(v) = flags.repetitions {
            repetitions = v;
        }
        if let Some(v) = &flags.out {
            out = v.clone();
        }

        if seeds.is_empty() {
            return config_err("the seed list is empty");
        }
        if q_mins.is_empty() {
            return config_err("the q_min list is empty");
        }
        search.seed = seeds[0];
        mlp.seed = seeds[0];
        search.validate().map_err(|e| ConfigError(e.to_string()))?;
        mlp.validate().map_err(|e| ConfigError(e.to_string()))?;
        if let Source::Synthetic(spec) = &source {
            spec.validate().map_err(|e| ConfigError(e.to_string()))?;
        }
        Ok(RunConfig {
            source,
            search,
            mlp,
            nf,
            standardize,
            communities,
            out,
            seeds,
            q_mins,
            grid,
            shuffle_labels,
            repetitions,
        })
    }
}

fn resolve_source(file: &ConfigFile, flags: &Overrides) -> Result<Source, ConfigError> {
    let data = flags.data.clone().or(file.get::<PathBuf>("data")?);
    let synth = flags.synth || file.has_synth();
    match (data, synth) {
        (Some(_), true) => config_err("choose either a dataset directory or a synthetic graph, not both"),
        (None, false) => config_err("no input: pass --data DIR, --synth, or set data/synth.* in the config"),
        (Some(dir), false) => Ok(Source::Dataset(dir)),
        (None, true) => {
            let mut spec = SbmSpec::default();
            if let Some((v, _)) = file.raw("synth") {
                if !parse_bool("synth", v)? {
                    return config_err("synth = false together with no dataset");
                }
            }
            macro_rules! set {
                ($field:ident, $key:literal) => {
                    if let Some(v) = file.get($key)? {
                        spec.$field = v;
                    }
                };
            }
            set!(n, "synth.n");
            set!(blocks, "synth.blocks");
            set!(p_in, "synth.p_in");
            set!(p_out, "synth.p_out");
            set!(alignment, "synth.alignment");
            set!(feature_dim, "synth.feature_dim");
            set!(feature_signal, "synth.feature_signal");
            set!(feature_noise, "synth.feature_noise");
            set!(seed, "synth.seed");
            Ok(Source::Synthetic(spec))
        }
    }
}
