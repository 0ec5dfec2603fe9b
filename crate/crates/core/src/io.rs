//! On-disk formats.
//!
//! * Edge list: one `u v [w]` per line, whitespace separated, `#` comments.
//! * Features: comma-separated rows, or the `ATLF1` binary container
//!   (magic, little-endian `u64` rows and columns, then row-major `f32`).
//! * Labels: one non-negative integer per line.
//! * Masks: one of `train`, `val`, `test`, `none` per line.
//! * Partitions: a `# gamma=<γ> Q=<Q> K=<K>` header, then one community id per line.
//! * Profiles: a directory holding `profile.tsv` and one partition file per resolution.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::community::{CommunityResult, Partition};
use crate::error::{AtlasError, Result};
use crate::graph::{Graph, GraphBuilder, Masks, Split};
use crate::resolution::{ResolutionProfile, SearchConfig};

pub const ATLF1_MAGIC: &[u8; 5] = b"ATLF1";
pub const PROFILE_TABLE: &str = "profile.tsv";

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| AtlasError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| AtlasError::io(path, e))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if !body.is_empty() {
            out.push((i + 1, body.to_string()));
        }
    }
    Ok(out)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AtlasError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| AtlasError::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| AtlasError::io(path, e))
}

/// Reads an edge list over `n` nodes into a builder.
pub fn read_edge_list(path: &Path, n: usize) -> Result<GraphBuilder> {
    let mut b = GraphBuilder::new(n);
    for (line, body) in content_lines(path)? {
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(AtlasError::parse(
                path,
                line,
                format!("expected `u v [w]`, got {body:?}"),
            ));
        }
        let node = |s: &str| -> Result<usize> {
            let v: usize = s
                .parse()
                .map_err(|_| AtlasError::parse(path, line, format!("bad node id {s:?}")))?;
            if v >= n {
                return Err(AtlasError::parse(
                    path,
                    line,
                    format!("node id {v} out of range for {n} nodes"),
                ));
            }
            Ok(v)
        };
        let (u, v) = (node(fields[0])?, node(fields[1])?);
        let w = match fields.get(2) {
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| AtlasError::parse(path, line, format!("bad weight {s:?}")))?,
            None => 1.0,
        };
        b.add_weighted_edge(u, v, w)
            .map_err(|e| AtlasError::parse(path, line, e.to_string()))?;
    }
    Ok(b)
}

pub fn write_edge_list(path: &Path, g: &Graph) -> Result<()> {
    let mut w = create(path)?;
    let weighted = g.is_weighted();
    for (u, v, wt) in g.edges() {
        let r = if weighted {
            writeln!(w, "{u} {v} {wt}")
        } else {
            writeln!(w, "{u} {v}")
        };
        r.map_err(|e| AtlasError::io(path, e))?;
    }
    finish(path, w)
}

/// Reads features in either format, sniffing the `ATLF1` magic.
pub fn read_features(path: &Path) -> Result<Array2<f64>> {
    let mut head = [0u8; 5];
    let mut f = File::open(path).map_err(|e| AtlasError::io(path, e))?;
    let got = f.read(&mut head).map_err(|e| AtlasError::io(path, e))?;
    if got == 5 && &head == ATLF1_MAGIC {
        read_atlf1(path)
    } else {
        read_features_csv(path)
    }
}

pub fn read_features_csv(path: &Path) -> Result<Array2<f64>> {
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (line, body) in content_lines(path)? {
        let before = data.len();
        for field in body.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| AtlasError::parse(path, line, format!("bad number {:?}", field.trim())))?;
            data.push(v);
        }
        let w = data.len() - before;
        match width {
            None => width = Some(w),
            Some(d) if d != w => {
                return Err(AtlasError::parse(
                    path,
                    line,
                    format!("row has {w} columns, expected {d}"),
                ));
            }
            _ => {}
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, width.unwrap_or(0)), data).map_err(|e| AtlasError::Shape(e.to_string()))
}

pub fn write_features_csv(path: &Path, x: &Array2<f64>) -> Result<()> {
    let mut w = create(path)?;
    for row in x.rows() {
        let line = row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        writeln!(w, "{line}").map_err(|e| AtlasError::io(path, e))?;
    }
    finish(path, w)
}

pub fn read_atlf1(path: &Path) -> Result<Array2<f64>> {
    let bytes = fs::read(path).map_err(|e| AtlasError::io(path, e))?;
    let bad = |m: String| AtlasError::Data(format!("{}: {m}", path.display()));
    if bytes.len() < 21 || &bytes[..5] != ATLF1_MAGIC {
        return Err(bad("not an ATLF1 container".into()));
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let (n, d) = (word(5) as usize, word(13) as usize);
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| bad(format!("header size {n}×{d} overflows")))?;
    if bytes.len() - 21 != expected {
        return Err(bad(format!(
            "header promises {n}×{d} values, payload has {} bytes",
            bytes.len() - 21
        )));
    }
    let data = bytes[21..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    Array2::from_shape_vec((n, d), data).map_err(|e| AtlasError::Shape(e.to_string()))
}

/// Writes `x` as `ATLF1`; values are narrowed to `f32`.
pub fn write_atlf1(path: &Path, x: &Array2<f64>) -> Result<()> {
    let mut w = create(path)?;
    let mut buf = Vec::with_capacity(21 + x.len() * 4);
    buf.extend_from_slice(ATLF1_MAGIC);
    buf.extend_from_slice(&(x.nrows() as u64).to_le_bytes());
    buf.extend_from_slice(&(x.ncols() as u64).to_le_bytes());
    for &v in x.iter() {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf).map_err(|e| AtlasError::io(path, e))?;
    finish(path, w)
}

pub fn read_labels(path: &Path) -> Result<Vec<u32>> {
    content_lines(path)?
        .into_iter()
        .map(|(line, body)| {
            body.parse::<u32>()
                .map_err(|_| AtlasError::parse(path, line, format!("bad label {body:?}")))
        })
        .collect()
}

pub fn write_labels(path: &Path, labels: &[u32]) -> Result<()> {
    let mut w = create(path)?;
    for y in labels {
        writeln!(w, "{y}").map_err(|e| AtlasError::io(path, e))?;
    }
    finish(path, w)
}

pub fn read_masks(path: &Path) -> Result<Masks> {
    let splits = content_lines(path)?
        .into_iter()
        .map(|(line, body)| {
            Split::parse(&body).ok_or_else(|| AtlasError::parse(path, line, format!("bad split {body:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Masks::new(splits))
}

pub fn write_masks(path: &Path, masks: &Masks) -> Result<()> {
    let mut w = create(path)?;
    for s in masks.splits() {
        writeln!(w, "{}", s.as_str()).map_err(|e| AtlasError::io(path, e))?;
    }
    finish(path, w)
}

/// Loads a graph. The node count comes from the feature file.
pub fn load_graph(edges: &Path, features: &Path, labels: Option<&Path>, masks: Option<&Path>) -> Result<Graph> {
    let x = read_features(features)?;
    let builder = read_edge_list(edges, x.nrows())?;
    let mut g = builder.build_with_features(x)?;
    if let Some(p) = labels {
        let y = read_labels(p)?;
        if y.len() != g.num_nodes() {
            return Err(AtlasError::Data(format!(
                "{} has {} labels for {} nodes",
                p.display(),
                y.len(),
                g.num_nodes()
            )));
        }
        g = g.with_labels(y)?;
    }
    if let Some(p) = masks {
        g = g.with_masks(read_masks(p)?)?;
    }
    Ok(g)
}

/// Paths of a dataset directory laid out as `edges.txt`, `features.csv` (or
/// `features.atlf`), `labels.txt` and `masks.txt`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: Option<PathBuf>,
    pub masks: Option<PathBuf>,
}

impl DatasetPaths {
    pub fn in_dir(dir: &Path) -> Self {
        let opt = |name: &str| Some(dir.join(name)).filter(|p| p.exists());
        let features = opt("features.atlf").unwrap_or_else(|| dir.join("features.csv"));
        DatasetPaths {
            edges: dir.join("edges.txt"),
            features,
            labels: opt("labels.txt"),
            masks: opt("masks.txt"),
        }
    }

    pub fn load(&self) -> Result<Graph> {
        load_graph(
            &self.edges,
            &self.features,
            self.labels.as_deref(),
            self.masks.as_deref(),
        )
    }
}

/// Writes a graph in the directory layout read by [`DatasetPaths::in_dir`].
pub fn save_dataset(dir: &Path, g: &Graph) -> Result<()> {
    write_edge_list(&dir.join("edges.txt"), g)?;
    write_features_csv(&dir.join("features.csv"), g.features())?;
    if let Some(y) = g.labels() {
        write_labels(&dir.join("labels.txt"), y)?;
    }
    if let Some(m) = g.masks() {
        write_masks(&dir.join("masks.txt"), m)?;
    }
    Ok(())
}

pub fn write_partition(path: &Path, r: &CommunityResult) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| AtlasError::io(path, e);
    writeln!(w, "# gamma={} Q={} K={}", r.gamma, r.modularity, r.num_communities()).map_err(io)?;
    for c in r.partition.assignment() {
        writeln!(w, "{c}").map_err(io)?;
    }
    finish(path, w)
}

/// Reads a partition file written by [`write_partition`].
pub fn read_partition(path: &Path) -> Result<CommunityResult> {
    let file = File::open(path).map_err(|e| AtlasError::io(path, e))?;
    let mut gamma = None;
    let mut q = None;
    let mut k = None;
    let mut ids = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| AtlasError::io(path, e))?;
        let body = line.trim();
        if let Some(header) = body.strip_prefix('#') {
            for kv in header.split_whitespace() {
                let Some((key, value)) = kv.split_once('=') else {
                    continue;
                };
                let num = || {
                    value
                        .parse::<f64>()
                        .map_err(|_| AtlasError::parse(path, i + 1, format!("bad header value {kv:?}")))
                };
                match key {
                    "gamma" => gamma = Some(num()?),
                    "Q" => q = Some(num()?),
                    "K" => k = Some(num()? as usize),
                    _ => {}
                }
            }
        } else if !body.is_empty() {
            ids.push(
                body.parse::<u32>()
                    .map_err(|_| AtlasError::parse(path, i + 1, format!("bad community id {body:?}")))?,
            );
        }
    }
    let (Some(gamma), Some(modularity)) = (gamma, q) else {
        return Err(AtlasError::parse(path, 1, "missing `# gamma=<γ> Q=<Q> K=<K>` header"));
    };
    let partition = Partition::from_labels(&ids);
    if k.is_some_and(|k| k != partition.num_blocks()) {
        return Err(AtlasError::Data(format!(
            "{}: header says K={}, file has {} communities",
            path.display(),
            k.unwrap_or(0),
            partition.num_blocks()
        )));
    }
    Ok(CommunityResult {
        gamma,
        partition,
        modularity,
    })
}

pub fn partition_file_name(gamma: f64) -> String {
    format!("partition_gamma_{gamma}.txt")
}

/// Writes `profile.tsv` and the partition files into `dir`.
pub fn write_profile(dir: &Path, profile: &ResolutionProfile) -> Result<()> {
    let table = dir.join(PROFILE_TABLE);
    let mut w = create(&table)?;
    let io = |e| AtlasError::io(&table, e);
    writeln!(w, "#gamma\tQ\tK\tpartition_file").map_err(io)?;
    for e in profile.entries() {
        let name = partition_file_name(e.gamma);
        write_partition(&dir.join(&name), e)?;
        writeln!(w, "{}\t{}\t{}\t{}", e.gamma, e.modularity, e.num_communities(), name).map_err(io)?;
    }
    finish(&table, w)
}

/// Reads a profile directory. Partition paths are relative to `dir`.
pub fn read_profile(dir: &Path, config: SearchConfig) -> Result<ResolutionProfile> {
    let table = dir.join(PROFILE_TABLE);
    let mut entries = Vec::new();
    for (line, body) in content_lines(&table)? {
        let fields: Vec<&str> = body.split('\t').collect();
        if fields.len() != 4 {
            return Err(AtlasError::parse(
                &table,
                line,
                "expected gamma, Q, K and a partition file",
            ));
        }
        let r = read_partition(&dir.join(fields[3]))?;
        entries.push(r);
    }
    ResolutionProfile::new(entries, config)
}

/// Model parameters as a single `1 × P` `ATLF1` row, in the order of
/// [`crate::model::MlpParams::slices`].
pub fn write_checkpoint(path: &Path, params: &crate::model::MlpParams) -> Result<()> {
    let flat: Vec<f64> = params.slices().concat();
    let row = Array2::from_shape_vec((1, flat.len()), flat).expect("row vector");
    write_atlf1(path, &row)
}

/// Loads a checkpoint into parameters of matching shape.
pub fn read_checkpoint(path: &Path, params: &mut crate::model::MlpParams) -> Result<()> {
    let x = read_atlf1(path)?;
    if x.len() != params.num_parameters() {
        return Err(AtlasError::Shape(format!(
            "checkpoint holds {} values, network has {}",
            x.len(),
            params.num_parameters()
        )));
    }
    let mut it = x.iter();
    for s in params.slices_mut() {
        for v in s.iter_mut() {
            *v = *it.next().expect("sizes checked");
        }
    }
    Ok(())
}
