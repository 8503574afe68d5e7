//! Run configuration: a key-value file merged with command-line overrides.
//!
//! Precedence is defaults < config file < flags. Relative paths inside a
//! config file resolve against the file's own directory, so a bundled
//! fixture config works from any working directory; paths given as flags
//! resolve against the working directory as typed.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use cyclex_core::corpus::XmlMapping;
use cyclex_core::expander::ExpansionConfig;

/// Ranks whose precision the quality average uses; also the only ranks the
/// report can show.
pub const SUPPORTED_R_SET: [u32; 4] = [1, 5, 10, 15];

#[derive(Debug, Clone, Args, Default)]
pub struct ConfigArgs {
    /// Key-value configuration file; every key can be overridden by a flag.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Graph nodes file (`id<TAB>kind<TAB>title`).
    #[arg(long, value_name = "FILE")]
    pub graph_nodes: Option<PathBuf>,

    /// Graph edges file (`src<TAB>dst<TAB>kind`).
    #[arg(long, value_name = "FILE")]
    pub graph_edges: Option<PathBuf>,

    /// Shorthand for --graph-nodes PREFIX.nodes.tsv --graph-edges PREFIX.edges.tsv.
    #[arg(long, value_name = "PREFIX")]
    pub graph: Option<PathBuf>,

    /// Document corpus: a directory of XML files or a JSONL file.
    #[arg(long, value_name = "PATH")]
    pub corpus: Option<PathBuf>,

    /// Queries file (JSONL: query_id, keywords, expected_docs).
    #[arg(long, value_name = "FILE")]
    pub queries: Option<PathBuf>,

    /// Directory receiving all pipeline artifacts.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Seed for the ground-truth local search.
    #[arg(long)]
    pub rng_seed: Option<u64>,

    /// Longest cycle to enumerate (2-5).
    #[arg(long, visible_alias = "max-len")]
    pub max_cycle_len: Option<usize>,

    /// Cycle lengths whose articles become expansion features.
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,

    /// Minimum category ratio for feature cycles of length >= 3.
    #[arg(long)]
    pub min_category_ratio: Option<f64>,

    /// Minimum extra-edge density for feature cycles.
    #[arg(long)]
    pub min_density: Option<f64>,

    /// Ranks shown in the report (subset of 1,5,10,15).
    #[arg(long, value_delimiter = ',')]
    pub r_set: Option<Vec<u32>>,

    /// Worker thread cap; CYCLEX_THREADS is the fallback.
    #[arg(long)]
    pub threads: Option<usize>,

    /// Element path of the document name in corpus XML.
    #[arg(long, value_name = "PATH")]
    pub xml_name_path: Option<String>,

    /// Element path of the English text in corpus XML.
    #[arg(long, value_name = "PATH")]
    pub xml_english_path: Option<String>,

    /// Element path of the comment text in corpus XML.
    #[arg(long, value_name = "PATH")]
    pub xml_comment_path: Option<String>,
}

/// Fully resolved settings for a run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub graph_nodes: Option<PathBuf>,
    pub graph_edges: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub rng_seed: u64,
    pub max_cycle_len: usize,
    pub lengths: BTreeSet<usize>,
    pub min_category_ratio: f64,
    pub min_density: f64,
    pub r_set: Vec<u32>,
    pub threads: Option<usize>,
    pub xml_mapping: XmlMapping,
}

impl RunConfig {
    pub fn resolve(args: &ConfigArgs) -> Result<RunConfig> {
        let defaults = XmlMapping::default();
        let mut cfg = RunConfig {
            graph_nodes: None,
            graph_edges: None,
            corpus: None,
            queries: None,
            out_dir: PathBuf::new(),
            rng_seed: 42,
            max_cycle_len: 5,
            lengths: [2, 3, 4, 5].into_iter().collect(),
            min_category_ratio: 0.0,
            min_density: 0.0,
            r_set: SUPPORTED_R_SET.to_vec(),
            threads: None,
            xml_mapping: defaults,
        };
        let mut out_dir: Option<PathBuf> = None;

        if let Some(file) = &args.config {
            apply_file(&mut cfg, &mut out_dir, file)?;
        }
        apply_flags(&mut cfg, &mut out_dir, args)?;

        if cfg.threads.is_none() {
            if let Ok(value) = std::env::var("CYCLEX_THREADS") {
                let parsed = value
                    .parse::<usize>()
                    .with_context(|| format!("CYCLEX_THREADS {value:?} is not a thread count"))?;
                cfg.threads = Some(parsed);
            }
        }

        cfg.out_dir = out_dir.ok_or_else(|| {
            anyhow!("out_dir is not set (use --out-dir or an out_dir line in the config file)")
        })?;
        cfg.validate_values()?;
        Ok(cfg)
    }

    fn validate_values(&self) -> Result<()> {
        if !(2..=5).contains(&self.max_cycle_len) {
            bail!("max_cycle_len {} outside 2..=5", self.max_cycle_len);
        }
        self.expansion_config()
            .validate()
            .map_err(|e| anyhow!("{e}"))?;
        if self.r_set.is_empty() {
            bail!("r_set selects no ranks");
        }
        for r in &self.r_set {
            if !SUPPORTED_R_SET.contains(r) {
                bail!("r_set rank {r} unsupported; quality averages precision at ranks 1, 5, 10, 15");
            }
        }
        if self.r_set.windows(2).any(|w| w[0] >= w[1]) {
            bail!("r_set ranks must be strictly ascending");
        }
        if self.threads == Some(0) {
            bail!("threads must be at least 1");
        }
        Ok(())
    }

    pub fn expansion_config(&self) -> ExpansionConfig {
        ExpansionConfig {
            lengths: self.lengths.clone(),
            min_category_ratio: self.min_category_ratio,
            min_density: self.min_density,
        }
    }

    /// A required input path, by config key name.
    pub fn require(&self, key: &str) -> Result<&Path> {
        let slot = match key {
            "graph_nodes" => &self.graph_nodes,
            "graph_edges" => &self.graph_edges,
            "corpus" => &self.corpus,
            "queries" => &self.queries,
            _ => unreachable!("unknown required key {key}"),
        };
        slot.as_deref().ok_or_else(|| {
            anyhow!("{key} is not set (use --{} or a {key} line in the config file)", key.replace('_', "-"))
        })
    }
}

fn apply_file(cfg: &mut RunConfig, out_dir: &mut Option<PathBuf>, file: &Path) -> Result<()> {
    let text = fs::read_to_string(file)
        .with_context(|| format!("cannot read config file {}", file.display()))?;
    let base = file.parent().unwrap_or_else(|| Path::new("."));
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key=value", file.display(), idx + 1))?;
        let key = key.trim();
        let value = value.trim();
        let at = |what: &str| format!("{}:{}: {what} {value:?}", file.display(), idx + 1);
        let path = || base.join(value);
        match key {
            "graph_nodes" => cfg.graph_nodes = Some(path()),
            "graph_edges" => cfg.graph_edges = Some(path()),
            "corpus" => cfg.corpus = Some(path()),
            "queries" => cfg.queries = Some(path()),
            "out_dir" => *out_dir = Some(path()),
            "rng_seed" => cfg.rng_seed = value.parse().with_context(|| at("bad seed"))?,
            "max_cycle_len" => {
                cfg.max_cycle_len = value.parse().with_context(|| at("bad length"))?
            }
            "lengths" => cfg.lengths = parse_lengths(value).with_context(|| at("bad lengths"))?,
            "min_category_ratio" => {
                cfg.min_category_ratio = value.parse().with_context(|| at("bad ratio"))?
            }
            "min_density" => cfg.min_density = value.parse().with_context(|| at("bad ratio"))?,
            "r_set" => cfg.r_set = parse_r_set(value).with_context(|| at("bad r_set"))?,
            "threads" => cfg.threads = Some(value.parse().with_context(|| at("bad count"))?),
            "xml_name_path" => cfg.xml_mapping.name_path = value.to_string(),
            "xml_english_path" => cfg.xml_mapping.english_path = value.to_string(),
            "xml_comment_path" => cfg.xml_mapping.comment_path = value.to_string(),
            other => bail!("{}:{}: unknown setting {other:?}", file.display(), idx + 1),
        }
    }
    Ok(())
}

fn apply_flags(cfg: &mut RunConfig, out_dir: &mut Option<PathBuf>, args: &ConfigArgs) -> Result<()> {
    if let Some(prefix) = &args.graph {
        let named = |suffix: &str| {
            let mut os = prefix.as_os_str().to_owned();
            os.push(suffix);
            PathBuf::from(os)
        };
        cfg.graph_nodes = Some(named(".nodes.tsv"));
        cfg.graph_edges = Some(named(".edges.tsv"));
    }
    if let Some(v) = &args.graph_nodes {
        cfg.graph_nodes = Some(v.clone());
    }
    if let Some(v) = &args.graph_edges {
        cfg.graph_edges = Some(v.clone());
    }
    if let Some(v) = &args.corpus {
        cfg.corpus = Some(v.clone());
    }
    if let Some(v) = &args.queries {
        cfg.queries = Some(v.clone());
    }
    if let Some(v) = &args.out_dir {
        *out_dir = Some(v.clone());
    }
    if let Some(v) = args.rng_seed {
        cfg.rng_seed = v;
    }
    if let Some(v) = args.max_cycle_len {
        cfg.max_cycle_len = v;
    }
    if let Some(v) = &args.lengths {
        if v.is_empty() {
            bail!("--lengths selects no cycle lengths");
        }
        cfg.lengths = v.iter().copied().collect();
    }
    if let Some(v) = args.min_category_ratio {
        cfg.min_category_ratio = v;
    }
    if let Some(v) = args.min_density {
        cfg.min_density = v;
    }
    if let Some(v) = &args.r_set {
        if v.is_empty() {
            bail!("--r-set selects no ranks");
        }
        cfg.r_set = v.clone();
    }
    if let Some(v) = args.threads {
        cfg.threads = Some(v);
    }
    if let Some(v) = &args.xml_name_path {
        cfg.xml_mapping.name_path = v.clone();
    }
    if let Some(v) = &args.xml_english_path {
        cfg.xml_mapping.english_path = v.clone();
    }
    if let Some(v) = &args.xml_comment_path {
        cfg.xml_mapping.comment_path = v.clone();
    }
    Ok(())
}

fn parse_lengths(value: &str) -> Result<BTreeSet<usize>> {
    let lengths = value
        .split(',')
        .map(|part| part.trim().parse::<usize>().map_err(|e| anyhow!("{e}")))
        .collect::<Result<BTreeSet<usize>>>()?;
    if lengths.is_empty() {
        bail!("empty length list");
    }
    Ok(lengths)
}

fn parse_r_set(value: &str) -> Result<Vec<u32>> {
    value
        .split(',')
        .map(|part| part.trim().parse::<u32>().map_err(|e| anyhow!("{e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn args() -> ConfigArgs {
        ConfigArgs::default()
    }

    fn write_conf(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("run.conf");
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn file_paths_resolve_against_the_config_directory() {
        let dir = tempfile::tempdir().unwrap();
        let conf = write_conf(
            dir.path(),
            "graph_nodes = g.nodes.tsv\ngraph_edges = g.edges.tsv\nout_dir = out\n",
        );
        let mut a = args();
        a.config = Some(conf);
        let cfg = RunConfig::resolve(&a).unwrap();
        assert_eq!(cfg.graph_nodes.unwrap(), dir.path().join("g.nodes.tsv"));
        assert_eq!(cfg.out_dir, dir.path().join("out"));
    }

    #[test]
    fn flags_override_file_settings() {
        let dir = tempfile::tempdir().unwrap();
        let conf = write_conf(dir.path(), "out_dir = out\nrng_seed = 7\nlengths = 2,3\n");
        let mut a = args();
        a.config = Some(conf);
        a.rng_seed = Some(99);
        a.lengths = Some(vec![4, 5]);
        let cfg = RunConfig::resolve(&a).unwrap();
        assert_eq!(cfg.rng_seed, 99);
        assert_eq!(cfg.lengths, [4, 5].into_iter().collect());
    }

    #[test]
    fn graph_prefix_expands_to_both_files() {
        let mut a = args();
        a.graph = Some(PathBuf::from("fixtures/mini/graph"));
        a.out_dir = Some(PathBuf::from("out"));
        let cfg = RunConfig::resolve(&a).unwrap();
        assert_eq!(cfg.graph_nodes.unwrap(), PathBuf::from("fixtures/mini/graph.nodes.tsv"));
        assert_eq!(cfg.graph_edges.unwrap(), PathBuf::from("fixtures/mini/graph.edges.tsv"));
    }

    #[test]
    fn unknown_file_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let conf = write_conf(dir.path(), "out_dir = out\nmystery = 1\n");
        let mut a = args();
        a.config = Some(conf);
        let err = RunConfig::resolve(&a).unwrap_err().to_string();
        assert!(err.contains("unknown setting"), "{err}");
        assert!(err.contains(":2:"), "{err}");
    }

    #[test]
    fn unsupported_rank_is_rejected() {
        let mut a = args();
        a.out_dir = Some(PathBuf::from("out"));
        a.r_set = Some(vec![1, 7]);
        let err = RunConfig::resolve(&a).unwrap_err().to_string();
        assert!(err.contains("rank 7"), "{err}");
    }

    #[test]
    fn missing_out_dir_is_an_error() {
        let err = RunConfig::resolve(&args()).unwrap_err().to_string();
        assert!(err.contains("out_dir"), "{err}");
    }
}
