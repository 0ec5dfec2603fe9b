use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "atlas",
    version,
    about = "Multi-resolution community features for node classification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub overrides: Overrides,

    /// Key = value configuration file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run Louvain at the resolutions given by --resolutions.
    Communities,
    /// Adaptive resolution search; writes the profile and the modularity gaps.
    Search,
    /// Compare the labels with the partition at every resolution.
    NmiCurve,
    /// Search, build the design, train and evaluate once per seed.
    Train,
    /// Accuracy as the minimum modularity threshold is lowered.
    SweepQmin,
    /// Wall-clock timing of preprocessing, training epochs and inference.
    Bench,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Communities => "communities",
            Command::Search => "search",
            Command::NmiCurve => "nmi-curve",
            Command::Train => "train",
            Command::SweepQmin => "sweep-qmin",
            Command::Bench => "bench",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Dataset directory with edges.txt, features.csv|features.atlf, labels.txt, masks.txt.
    #[arg(long, global = true, value_name = "DIR")]
    pub data: Option<PathBuf>,

    /// Use a generated stochastic block model (tuned with synth.* config keys).
    #[arg(long, global = true)]
    pub synth: bool,

    #[arg(long, global = true, value_name = "N", conflicts_with = "seeds")]
    pub seed: Option<u64>,

    #[arg(long, global = true, value_name = "A,B,C", value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,

    /// Minimum modularity a resolution needs to be kept.
    #[arg(long, global = true, value_name = "Q")]
    pub qmin: Option<f64>,

    /// Largest modularity gap between neighboring resolutions.
    #[arg(long, global = true, value_name = "D")]
    pub delta_max: Option<f64>,

    /// Range of the random modularity drop used when extrapolating.
    #[arg(long, global = true, value_name = "A,B", value_delimiter = ',')]
    pub gap_range: Option<Vec<f64>>,

    /// Explicit resolutions; skips the adaptive search.
    #[arg(long, global = true, value_name = "G1,G2,...", value_delimiter = ',')]
    pub resolutions: Option<Vec<f64>>,

    /// Width of each community embedding.
    #[arg(long, global = true, value_name = "D")]
    pub dc: Option<usize>,

    #[arg(long, global = true, value_name = "N")]
    pub epochs: Option<usize>,

    /// Louvain passes per resolution; the best modularity is kept.
    #[arg(long, global = true, value_name = "R")]
    pub restarts: Option<usize>,

    /// Standardize every node-feature column before training.
    #[arg(long, global = true)]
    pub standardize: bool,

    /// Append mean-aggregated neighbor features.
    #[arg(long, global = true)]
    pub nf: bool,

    /// Train the plain MLP on node features only.
    #[arg(long, global = true)]
    pub no_communities: bool,

    /// Thresholds for sweep-qmin.
    #[arg(long, global = true, value_name = "Q1,Q2,...", value_delimiter = ',')]
    pub q_mins: Option<Vec<f64>>,

    /// Log-spaced resolutions lo,hi,count for nmi-curve.
    #[arg(long, global = true, value_name = "LO,HI,COUNT", value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,

    /// Permute the labels before comparing (nmi-curve).
    #[arg(long, global = true)]
    pub shuffle_labels: bool,

    /// Repetitions per timing (bench).
    #[arg(long, global = true, value_name = "N")]
    pub repetitions: Option<usize>,

    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}
