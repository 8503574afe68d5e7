//! The file-to-file pipeline behind every subcommand.
//!
//! Stages run in a fixed order — ingest, index, link, ground-truth,
//! assemble, analyze, expand, report — each reading the previous stage's
//! artifacts from the output directory and skipping itself when its own
//! outputs already exist. Failures carry the stage name. Artifacts are
//! written atomically (temp file + rename) so an interrupted stage never
//! leaves a half-written file that a resumed run would trust.
//!
//! Every artifact records the run's rng_seed: JSONL ground-truth records
//! carry it as a field, the phrase index and manifest embed it, and all
//! TSV/CSV/Markdown artifacts start with a `# rng_seed=<seed>` comment
//! (an HTML comment in Markdown). The extracted corpus is the one
//! exception — its strict `{"doc_id","text"}` line format is itself an
//! ingestion format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use cyclex_core::corpus::{load_corpus, write_extracted_jsonl, Corpus};
use cyclex_core::cycles::{
    aggregate_by_length, contribution_by_length_per_query, cycle_contribution, enumerate_cycles,
    reciprocal_pair_ratio, tpr, Cycle, CycleRecord,
};
use cyclex_core::expander::{baseline_row, config_family, evaluate_config, ConfigRow};
use cyclex_core::groundtruth::{
    assemble_query_graph, candidates_for_query, component_metrics, local_search, read_queries,
    read_records_jsonl, read_roles_tsv, summarize_components, write_entries_jsonl,
    write_roles_tsv, GroundTruthEntry, Query, Role,
};
use cyclex_core::kgraph::{read_edge_file, read_node_file, KnowledgeGraph, NodeId, Validation};
use cyclex_core::linker::Linker;
use cyclex_core::retrieval::PhraseIndex;

use crate::config::RunConfig;

/// Artifact locations under the output directory.
pub struct Artifacts {
    out: PathBuf,
}

impl Artifacts {
    pub fn new(out_dir: &Path) -> Artifacts {
        Artifacts {
            out: out_dir.to_path_buf(),
        }
    }

    pub fn manifest(&self) -> PathBuf {
        self.out.join("manifest.json")
    }
    pub fn graph_nodes(&self) -> PathBuf {
        self.out.join("graph.nodes.tsv")
    }
    pub fn graph_edges(&self) -> PathBuf {
        self.out.join("graph.edges.tsv")
    }
    pub fn corpus(&self) -> PathBuf {
        self.out.join("corpus.jsonl")
    }
    pub fn index(&self) -> PathBuf {
        self.out.join("index.json")
    }
    pub fn doc_links(&self) -> PathBuf {
        self.out.join("doc_links.tsv")
    }
    pub fn ground_truth(&self) -> PathBuf {
        self.out.join("ground_truth.jsonl")
    }
    pub fn gt_summary(&self) -> PathBuf {
        self.out.join("gt_precision_summary.csv")
    }
    pub fn query_graph_dir(&self) -> PathBuf {
        self.out.join("query_graphs")
    }
    pub fn component_metrics(&self) -> PathBuf {
        self.out.join("component_metrics.csv")
    }
    pub fn component_summary(&self) -> PathBuf {
        self.out.join("component_summary.csv")
    }
    pub fn cycles(&self) -> PathBuf {
        self.out.join("cycles.tsv")
    }
    pub fn aggregates(&self) -> PathBuf {
        self.out.join("aggregates.csv")
    }
    pub fn graph_stats(&self) -> PathBuf {
        self.out.join("graph_stats.csv")
    }
    pub fn table4(&self) -> PathBuf {
        self.out.join("table4.csv")
    }
    pub fn report_dir(&self) -> PathBuf {
        self.out.join("report")
    }
}

fn staged<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().with_context(|| format!("stage {name}"))
}

fn progress(stage: &str, what: &str) {
    eprintln!("[cyclex] {stage}: {what}");
}

fn cached(paths: &[PathBuf]) -> bool {
    !paths.is_empty() && paths.iter().all(|p| p.exists())
}

/// Writes via a sibling temp file so a crash cannot leave a partial artifact.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create directory {}", parent.display()))?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| anyhow!("artifact path {} has no file name", path.display()))?;
    let tmp = path.with_file_name(format!("{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, contents).with_context(|| format!("cannot write {}", tmp.display()))?;
    fs::rename(&tmp, path)
        .with_context(|| format!("cannot move {} into place", path.display()))?;
    Ok(())
}

fn seed_comment(cfg: &RunConfig) -> String {
    format!("# rng_seed={}\n", cfg.rng_seed)
}

fn need_artifact(path: &Path, produced_by: &str) -> Result<()> {
    if !path.exists() {
        bail!(
            "missing artifact {} (run `cyclex {produced_by}` first)",
            path.display()
        );
    }
    Ok(())
}

/// Main graph: the ingested artifact copy when present, otherwise the
/// configured input files — so stage commands work standalone.
fn load_main_graph(cfg: &RunConfig, art: &Artifacts) -> Result<KnowledgeGraph> {
    let (nodes, edges) = if art.graph_nodes().exists() && art.graph_edges().exists() {
        (art.graph_nodes(), art.graph_edges())
    } else {
        (
            cfg.require("graph_nodes")?.to_path_buf(),
            cfg.require("graph_edges")?.to_path_buf(),
        )
    };
    Ok(KnowledgeGraph::load(&nodes, &edges)?)
}

/// Query subgraphs drop completeness guarantees (an article may have lost
/// its categories), so they reload under relaxed validation.
fn load_relaxed_graph(nodes: &Path, edges: &Path) -> Result<KnowledgeGraph> {
    let records = read_node_file(nodes)?;
    let edge_list = read_edge_file(edges)?;
    Ok(KnowledgeGraph::from_parts(
        records,
        edge_list,
        Validation::Relaxed,
    )?)
}

fn load_corpus_artifact(cfg: &RunConfig, art: &Artifacts) -> Result<Corpus> {
    let path = if art.corpus().exists() {
        art.corpus()
    } else {
        cfg.require("corpus")?.to_path_buf()
    };
    let loaded = load_corpus(&path, &cfg.xml_mapping)?;
    Ok(loaded.corpus)
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    rng_seed: u64,
    index: PhraseIndex,
}

pub fn load_index(path: &Path) -> Result<PhraseIndex> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let parsed: IndexFile = serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("cannot parse {}", path.display()))?;
    Ok(parsed.index)
}

fn load_queries(cfg: &RunConfig) -> Result<Vec<Query>> {
    let path = cfg.require("queries")?;
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(read_queries(
        BufReader::new(file),
        &path.display().to_string(),
    )?)
}

fn load_entries(graph: &KnowledgeGraph, art: &Artifacts) -> Result<Vec<GroundTruthEntry>> {
    let path = art.ground_truth();
    need_artifact(&path, "ground-truth")?;
    let file = File::open(&path)?;
    let records = read_records_jsonl(BufReader::new(file), &path.display().to_string())?;
    records
        .iter()
        .map(|r| Ok(GroundTruthEntry::from_record(r, graph)?))
        .collect()
}

fn read_doc_links(path: &Path) -> Result<BTreeMap<String, BTreeSet<NodeId>>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut links = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (doc_id, ids) = line
            .split_once('\t')
            .ok_or_else(|| anyhow!("{}:{}: expected doc_id<TAB>ids", path.display(), idx + 1))?;
        let mut set = BTreeSet::new();
        for part in ids.split(',').filter(|p| !p.is_empty()) {
            let id: u64 = part
                .parse()
                .map_err(|_| anyhow!("{}:{}: bad node id {part:?}", path.display(), idx + 1))?;
            set.insert(NodeId(id));
        }
        links.insert(doc_id.to_string(), set);
    }
    Ok(links)
}

/// Stable file stem for a query id; distinct ids must stay distinct.
fn query_file_stem(query_id: &str) -> String {
    query_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn manifest_body(cfg: &RunConfig) -> Result<String> {
    // The output directory itself is deliberately absent: the manifest
    // lives inside it, and recording it would make otherwise identical
    // runs into different artifacts.
    #[derive(Serialize)]
    struct Manifest<'a> {
        rng_seed: u64,
        graph_nodes: Option<String>,
        graph_edges: Option<String>,
        corpus: Option<String>,
        queries: Option<String>,
        max_cycle_len: usize,
        lengths: &'a BTreeSet<usize>,
        min_category_ratio: f64,
        min_density: f64,
        r_set: &'a [u32],
        threads: Option<usize>,
        xml_name_path: &'a str,
        xml_english_path: &'a str,
        xml_comment_path: &'a str,
    }
    let path_str = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    let manifest = Manifest {
        rng_seed: cfg.rng_seed,
        graph_nodes: path_str(&cfg.graph_nodes),
        graph_edges: path_str(&cfg.graph_edges),
        corpus: path_str(&cfg.corpus),
        queries: path_str(&cfg.queries),
        max_cycle_len: cfg.max_cycle_len,
        lengths: &cfg.lengths,
        min_category_ratio: cfg.min_category_ratio,
        min_density: cfg.min_density,
        r_set: &cfg.r_set,
        threads: cfg.threads,
        xml_name_path: &cfg.xml_mapping.name_path,
        xml_english_path: &cfg.xml_mapping.english_path,
        xml_comment_path: &cfg.xml_mapping.comment_path,
    };
    Ok(format!("{}\n", serde_json::to_string_pretty(&manifest)?))
}

pub fn write_manifest(cfg: &RunConfig) -> Result<()> {
    let art = Artifacts::new(&cfg.out_dir);
    write_atomic(&art.manifest(), &manifest_body(cfg)?)
}

/// Checks every configured input before any stage runs; failures name the
/// stage that would have consumed the path.
pub fn validate_inputs(cfg: &RunConfig) -> Result<()> {
    let checks = [
        ("ingest", "graph_nodes"),
        ("ingest", "graph_edges"),
        ("ingest", "corpus"),
        ("ground-truth", "queries"),
    ];
    for (stage, key) in checks {
        let path = cfg
            .require(key)
            .with_context(|| format!("stage {stage}"))?;
        if !path.exists() {
            bail!("stage {stage}: {key} path does not exist: {}", path.display());
        }
    }
    Ok(())
}

pub fn ingest_graph(cfg: &RunConfig) -> Result<()> {
    staged("ingest", || {
        let art = Artifacts::new(&cfg.out_dir);
        if cached(&[art.graph_nodes(), art.graph_edges()]) {
            progress("ingest", "graph cached");
            return Ok(());
        }
        let nodes_path = cfg.require("graph_nodes")?;
        let edges_path = cfg.require("graph_edges")?;
        let graph = KnowledgeGraph::load(nodes_path, edges_path)?;

        let mut nodes_out: Vec<u8> = seed_comment(cfg).into_bytes();
        graph.write_nodes_tsv(&mut nodes_out)?;
        write_atomic(&art.graph_nodes(), std::str::from_utf8(&nodes_out)?)?;

        let mut edges_out: Vec<u8> = seed_comment(cfg).into_bytes();
        graph.write_edges_tsv(&mut edges_out)?;
        write_atomic(&art.graph_edges(), std::str::from_utf8(&edges_out)?)?;

        progress(
            "ingest",
            &format!("graph: {} nodes, {} edges", graph.node_count(), graph.edge_count()),
        );
        Ok(())
    })
}

pub fn ingest_corpus(cfg: &RunConfig) -> Result<()> {
    staged("ingest", || {
        let art = Artifacts::new(&cfg.out_dir);
        if cached(&[art.corpus()]) {
            progress("ingest", "corpus cached");
            return Ok(());
        }
        let path = cfg.require("corpus")?;
        if !path.exists() {
            bail!("corpus path does not exist: {}", path.display());
        }
        let loaded = load_corpus(path, &cfg.xml_mapping)?;
        for warning in &loaded.warnings {
            progress("ingest", &format!("warning: {warning}"));
        }
        let mut out = Vec::new();
        write_extracted_jsonl(&loaded.corpus, &mut out)?;
        write_atomic(&art.corpus(), std::str::from_utf8(&out)?)?;
        progress("ingest", &format!("corpus: {} documents", loaded.corpus.len()));
        Ok(())
    })
}

pub fn index_stage(cfg: &RunConfig) -> Result<()> {
    staged("index", || {
        let art = Artifacts::new(&cfg.out_dir);
        if cached(&[art.index()]) {
            progress("index", "cached");
            return Ok(());
        }
        let corpus = load_corpus_artifact(cfg, &art)?;
        let index = PhraseIndex::build(&corpus);
        let body = serde_json::to_string(&IndexFile {
            rng_seed: cfg.rng_seed,
            index,
        })?;
        write_atomic(&art.index(), &format!("{body}\n"))?;
        progress("index", &format!("{} documents indexed", corpus.len()));
        Ok(())
    })
}

pub fn link_stage(cfg: &RunConfig) -> Result<()> {
    staged("link", || {
        let art = Artifacts::new(&cfg.out_dir);
        if cached(&[art.doc_links()]) {
            progress("link", "cached");
            return Ok(());
        }
        let graph = load_main_graph(cfg, &art)?;
        let corpus = load_corpus_artifact(cfg, &art)?;
        let linker = Linker::build(&graph)?;
        let mut body = seed_comment(cfg);
        for doc in corpus.documents() {
            let result = linker.link(&doc.extracted_text);
            let ids: Vec<String> = result.articles.iter().map(|id| id.to_string()).collect();
            writeln!(body, "{}\t{}", doc.doc_id, ids.join(",")).unwrap();
        }
        write_atomic(&art.doc_links(), &body)?;
        progress("link", &format!("{} documents linked", corpus.len()));
        Ok(())
    })
}

pub fn ground_truth_stage(cfg: &RunConfig) -> Result<()> {
    staged("ground-truth", || {
        let art = Artifacts::new(&cfg.out_dir);
        if cached(&[art.ground_truth(), art.gt_summary()]) {
            progress("ground-truth", "cached");
            return Ok(());
        }
        let graph = load_main_graph(cfg, &art)?;
        need_artifact(&art.index(), "index")?;
        let index = load_index(&art.index())?;
        need_artifact(&art.doc_links(), "link")?;
        let doc_links = read_doc_links(&art.doc_links())?;
        let queries = load_queries(cfg)?;
        let linker = Linker::build(&graph)?;

        let entries: Vec<GroundTruthEntry> = queries
            .par_iter()
            .map(|query| {
                let linked = linker.link(&query.keywords).articles;
                let candidates = candidates_for_query(query, &doc_links);
                local_search(query, &linked, &candidates, &graph, &index, cfg.rng_seed)
            })
            .collect();

        let mut body = Vec::new();
        write_entries_jsonl(&entries, &graph, &mut body)?;
        write_atomic(&art.ground_truth(), std::str::from_utf8(&body)?)?;

        let mut summary = seed_comment(cfg);
        summary.push_str("rank,min,q1,median,q3,max\n");
        for &r in &crate::config::SUPPORTED_R_SET {
            let values: Vec<f64> = entries
                .iter()
                .map(|e| e.per_r_precision.get(&r).copied().unwrap_or(0.0))
                .collect();
            let [min, q1, median, q3, max] = cyclex_core::stats::five_point_summary(&values)
                .ok_or_else(|| anyhow!("no queries to summarize"))?;
            writeln!(summary, "top-{r},{min},{q1},{median},{q3},{max}").unwrap();
        }
        write_atomic(&art.gt_summary(), &summary)?;
        progress("ground-truth", &format!("{} queries solved", entries.len()));
        Ok(())
    })
}

pub fn assemble_stage(cfg: &RunConfig) -> Result<()> {
    staged("assemble", || {
        let art = Artifacts::new(&cfg.out_dir);
        if cached(&[art.component_metrics(), art.component_summary()]) {
            progress("assemble", "cached");
            return Ok(());
        }
        let graph = load_main_graph(cfg, &art)?;
        let entries = load_entries(&graph, &art)?;
        let dir = art.query_graph_dir();

        let mut metrics = Vec::new();
        let mut seen_stems: BTreeMap<String, String> = BTreeMap::new();
        for entry in &entries {
            let stem = query_file_stem(&entry.query_id);
            if let Some(other) = seen_stems.insert(stem.clone(), entry.query_id.clone()) {
                bail!("query ids {other:?} and {:?} collide as file name {stem:?}", entry.query_id);
            }
            let qg = assemble_query_graph(entry, &graph)?;

            let mut nodes_out: Vec<u8> = seed_comment(cfg).into_bytes();
            qg.graph.write_nodes_tsv(&mut nodes_out)?;
            write_atomic(&dir.join(format!("{stem}.nodes.tsv")), std::str::from_utf8(&nodes_out)?)?;

            let mut edges_out: Vec<u8> = seed_comment(cfg).into_bytes();
            qg.graph.write_edges_tsv(&mut edges_out)?;
            write_atomic(&dir.join(format!("{stem}.edges.tsv")), std::str::from_utf8(&edges_out)?)?;

            let mut roles_out: Vec<u8> = seed_comment(cfg).into_bytes();
            write_roles_tsv(&qg, &mut roles_out)?;
            write_atomic(&dir.join(format!("{stem}.roles.tsv")), std::str::from_utf8(&roles_out)?)?;

            metrics.push(component_metrics(&qg));
        }

        let mut body = seed_comment(cfg);
        body.push_str("query_id,pct_size,pct_query,pct_articles,pct_categories,expansion_ratio\n");
        for m in &metrics {
            writeln!(
                body,
                "{},{},{},{},{},{}",
                m.query_id, m.pct_size, m.pct_query, m.pct_articles, m.pct_categories, m.expansion_ratio
            )
            .unwrap();
        }
        write_atomic(&art.component_metrics(), &body)?;

        let mut summary = seed_comment(cfg);
        summary.push_str("metric,min,q1,median,q3,max\n");
        for row in summarize_components(&metrics) {
            writeln!(
                summary,
                "{},{},{},{},{},{}",
                row.metric, row.min, row.q1, row.median, row.q3, row.max
            )
            .unwrap();
        }
        write_atomic(&art.component_summary(), &summary)?;
        progress("assemble", &format!("{} query graphs", entries.len()));
        Ok(())
    })
}

fn cycles_for_query_graph(
    dir: &Path,
    stem: &str,
    max_len: usize,
) -> Result<(Vec<Cycle>, BTreeSet<NodeId>)> {
    let nodes = dir.join(format!("{stem}.nodes.tsv"));
    let edges = dir.join(format!("{stem}.edges.tsv"));
    let roles_path = dir.join(format!("{stem}.roles.tsv"));
    need_artifact(&nodes, "assemble")?;
    need_artifact(&roles_path, "assemble")?;
    let subgraph = load_relaxed_graph(&nodes, &edges)?;
    let file = File::open(&roles_path)?;
    let roles = read_roles_tsv(BufReader::new(file), &roles_path.display().to_string())?;
    let seeds: BTreeSet<NodeId> = roles
        .iter()
        .filter(|(_, role)| **role == Role::QueryArticle)
        .map(|(id, _)| *id)
        .collect();
    let cycles = enumerate_cycles(&subgraph, &seeds, max_len)?;
    Ok((cycles, seeds))
}

pub fn analyze_stage(cfg: &RunConfig, query_graphs: Option<&Path>) -> Result<()> {
    staged("analyze", || {
        let art = Artifacts::new(&cfg.out_dir);
        if cached(&[art.cycles(), art.aggregates(), art.graph_stats()]) {
            progress("analyze", "cached");
            return Ok(());
        }
        let graph = load_main_graph(cfg, &art)?;
        need_artifact(&art.index(), "index")?;
        let index = load_index(&art.index())?;
        let entries = load_entries(&graph, &art)?;
        let queries = load_queries(cfg)?;
        let by_id: BTreeMap<&str, &Query> =
            queries.iter().map(|q| (q.query_id.as_str(), q)).collect();
        let dir = query_graphs
            .map(Path::to_path_buf)
            .unwrap_or_else(|| art.query_graph_dir());

        let per_query: Vec<Vec<CycleRecord>> = entries
            .par_iter()
            .map(|entry| {
                let query = by_id.get(entry.query_id.as_str()).ok_or_else(|| {
                    anyhow!("ground truth references unknown query {:?}", entry.query_id)
                })?;
                let stem = query_file_stem(&entry.query_id);
                let (cycles, _) = cycles_for_query_graph(&dir, &stem, cfg.max_cycle_len)?;
                Ok(cycles
                    .into_iter()
                    .map(|cycle| {
                        let contribution = cycle_contribution(
                            &cycle,
                            &entry.linked_keywords,
                            &query.expected_docs,
                            &graph,
                            &index,
                        );
                        CycleRecord {
                            query_id: entry.query_id.clone(),
                            cycle,
                            contribution,
                        }
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        let records: Vec<CycleRecord> = per_query.into_iter().flatten().collect();

        let mut body = seed_comment(cfg);
        body.push_str(
            "query_id\tnodes\tlength\tn_articles\tn_categories\tinduced_edges\textra_edge_density\tcategory_ratio\tcontribution\n",
        );
        for r in &records {
            let nodes: Vec<String> = r.cycle.node_seq.iter().map(|n| n.to_string()).collect();
            writeln!(
                body,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.query_id,
                nodes.join(" "),
                r.cycle.length,
                r.cycle.n_articles,
                r.cycle.n_categories,
                r.cycle.induced_edges,
                r.cycle.extra_edge_density,
                r.cycle.category_ratio,
                r.contribution
            )
            .unwrap();
        }
        write_atomic(&art.cycles(), &body)?;

        // One row per length up to the bound, so downstream series keep a
        // fixed shape even when a length found nothing.
        let aggregates = aggregate_by_length(&records);
        let per_query_means = contribution_by_length_per_query(&records);
        let mut agg = seed_comment(cfg);
        agg.push_str(
            "length,count,mean_contribution,mean_category_ratio,mean_extra_edge_density,queries,mean_contribution_per_query\n",
        );
        for length in 2..=cfg.max_cycle_len {
            let row = aggregates.iter().find(|a| a.length == length);
            let pq = per_query_means.iter().find(|(l, _, _)| *l == length);
            match (row, pq) {
                (Some(a), Some((_, n_queries, mean))) => writeln!(
                    agg,
                    "{length},{},{},{},{},{n_queries},{mean}",
                    a.count, a.mean_contribution, a.mean_category_ratio, a.mean_extra_edge_density
                )
                .unwrap(),
                _ => writeln!(agg, "{length},0,,,,0,").unwrap(),
            }
        }
        write_atomic(&art.aggregates(), &agg)?;

        let articles = graph.nodes().filter(|n| graph.is_article(n.id()) && !graph.is_redirect(n.id())).count();
        let categories = graph.nodes().filter(|n| graph.is_category(n.id())).count();
        let redirects = graph.nodes().filter(|n| graph.is_redirect(n.id())).count();
        let mut stats = seed_comment(cfg);
        stats.push_str("nodes,edges,articles,categories,redirects,tpr,reciprocal_pair_ratio\n");
        writeln!(
            stats,
            "{},{},{articles},{categories},{redirects},{},{}",
            graph.node_count(),
            graph.edge_count(),
            tpr(&graph),
            reciprocal_pair_ratio(&graph)
        )
        .unwrap();
        write_atomic(&art.graph_stats(), &stats)?;

        progress("analyze", &format!("{} cycles across {} queries", records.len(), entries.len()));
        Ok(())
    })
}

pub fn read_cycles_artifact(path: &Path) -> Result<Vec<CycleRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('#') || line.starts_with("query_id\t") {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = |what: &str| anyhow!("{}:{}: {what}", path.display(), idx + 1);
        if fields.len() != 9 {
            return Err(bad("expected 9 tab-separated fields"));
        }
        let node_seq: Vec<NodeId> = fields[1]
            .split_whitespace()
            .map(|p| p.parse::<u64>().map(NodeId).map_err(|_| bad("bad node id")))
            .collect::<Result<_>>()?;
        records.push(CycleRecord {
            query_id: fields[0].to_string(),
            cycle: Cycle {
                node_seq,
                length: fields[2].parse().map_err(|_| bad("bad length"))?,
                n_articles: fields[3].parse().map_err(|_| bad("bad article count"))?,
                n_categories: fields[4].parse().map_err(|_| bad("bad category count"))?,
                induced_edges: fields[5].parse().map_err(|_| bad("bad edge count"))?,
                extra_edge_density: fields[6].parse().map_err(|_| bad("bad density"))?,
                category_ratio: fields[7].parse().map_err(|_| bad("bad ratio"))?,
            },
            contribution: fields[8].parse().map_err(|_| bad("bad contribution"))?,
        });
    }
    Ok(records)
}

fn format_config_row(row: &ConfigRow) -> String {
    let p = |r: u32| format!("{:.3}", row.per_r_precision.get(&r).copied().unwrap_or(0.0));
    format!(
        "{},{},{},{},{},{}\n",
        row.label,
        p(1),
        p(5),
        p(10),
        p(15),
        row.flagged.join(" ")
    )
}

pub fn expand_stage(cfg: &RunConfig) -> Result<()> {
    staged("expand", || {
        let art = Artifacts::new(&cfg.out_dir);
        if cached(&[art.table4()]) {
            progress("expand", "cached");
            return Ok(());
        }
        let graph = load_main_graph(cfg, &art)?;
        need_artifact(&art.index(), "index")?;
        let index = load_index(&art.index())?;
        let entries: BTreeMap<String, GroundTruthEntry> = load_entries(&graph, &art)?
            .into_iter()
            .map(|e| (e.query_id.clone(), e))
            .collect();
        let queries = load_queries(cfg)?;
        need_artifact(&art.cycles(), "analyze")?;
        let mut cycles_by_query: BTreeMap<String, Vec<Cycle>> = BTreeMap::new();
        for record in read_cycles_artifact(&art.cycles())? {
            cycles_by_query
                .entry(record.query_id)
                .or_default()
                .push(record.cycle);
        }

        let mut body = seed_comment(cfg);
        body.push_str("features,p1,p5,p10,p15,flagged\n");
        body.push_str(&format_config_row(&baseline_row(&queries, &entries, &graph, &index)?));
        for config in config_family(&cfg.expansion_config()) {
            let row = evaluate_config(&queries, &entries, &cycles_by_query, &config, &graph, &index)?;
            body.push_str(&format_config_row(&row));
        }
        write_atomic(&art.table4(), &body)?;
        progress("expand", "configuration table written");
        Ok(())
    })
}

pub fn report_stage(cfg: &RunConfig) -> Result<()> {
    staged("report", || crate::report::generate(cfg))
}

pub fn run_all(cfg: &RunConfig) -> Result<()> {
    validate_inputs(cfg)?;
    write_manifest(cfg)?;
    ingest_graph(cfg)?;
    ingest_corpus(cfg)?;
    index_stage(cfg)?;
    link_stage(cfg)?;
    ground_truth_stage(cfg)?;
    assemble_stage(cfg)?;
    analyze_stage(cfg, None)?;
    expand_stage(cfg)?;
    report_stage(cfg)?;
    Ok(())
}
