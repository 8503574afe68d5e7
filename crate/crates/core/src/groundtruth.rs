//! Ground-truth construction: expansion sets and query graphs.
//!
//! For each query, a local search over the articles linked in its relevant
//! documents finds a small article set whose titles, used as exact phrases,
//! maximize averaged top-r precision. The query's expansion set is the
//! linked keywords plus that chosen set; the query graph is the subgraph
//! induced by the expansion set, the main articles of any redirects in it,
//! and the categories of those articles.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cycles::connected_components;
use crate::error::{Error, Result};
use crate::kgraph::{KnowledgeGraph, NodeId};
use crate::linker::normalize;
use crate::retrieval::{article_phrases, PhraseIndex, DEFAULT_R_SET};
use crate::stats::quantile;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub keywords: String,
    pub expected_docs: BTreeSet<String>,
}

impl Query {
    pub fn validate(&self) -> Result<()> {
        if self.keywords.trim().is_empty() {
            return Err(Error::BadQuery {
                query_id: self.query_id.clone(),
                msg: "empty keywords".into(),
            });
        }
        if self.expected_docs.is_empty() {
            return Err(Error::BadQuery {
                query_id: self.query_id.clone(),
                msg: "empty expected_docs".into(),
            });
        }
        Ok(())
    }
}

/// Reads queries from JSON lines, in file order. Duplicate query ids are
/// rejected because artifacts are keyed by them downstream.
pub fn read_queries<R: BufRead>(reader: R, path: &str) -> Result<Vec<Query>> {
    let mut queries: Vec<Query> = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let query: Query = serde_json::from_str(&line).map_err(|e| Error::Json {
            path: path.into(),
            line: idx + 1,
            msg: e.to_string(),
        })?;
        query.validate()?;
        if !seen.insert(query.query_id.clone()) {
            return Err(Error::BadQuery {
                query_id: query.query_id,
                msg: "duplicate query_id".into(),
            });
        }
        queries.push(query);
    }
    if queries.is_empty() {
        return Err(Error::EmptyInput(path.into()));
    }
    Ok(queries)
}

/// One query's computed expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthEntry {
    pub query_id: String,
    pub linked_keywords: BTreeSet<NodeId>,
    pub candidates: BTreeSet<NodeId>,
    pub chosen: BTreeSet<NodeId>,
    pub expansion_set: BTreeSet<NodeId>,
    pub quality: f64,
    pub per_r_precision: BTreeMap<u32, f64>,
    pub rng_seed: u64,
}

/// Serialized form of an entry: titles instead of node ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub query_id: String,
    pub linked_keywords: Vec<String>,
    pub chosen: Vec<String>,
    pub quality: f64,
    pub per_r_precision: BTreeMap<u32, f64>,
    pub rng_seed: u64,
}

fn titles(graph: &KnowledgeGraph, ids: &BTreeSet<NodeId>) -> Vec<String> {
    let mut out: Vec<String> = ids
        .iter()
        .filter_map(|id| graph.node(*id).ok())
        .map(|n| n.label().to_string())
        .collect();
    out.sort();
    out
}

fn resolve_titles(
    graph: &KnowledgeGraph,
    titles: &[String],
    query_id: &str,
) -> Result<BTreeSet<NodeId>> {
    titles
        .iter()
        .map(|t| {
            graph
                .article_by_normalized_title(&normalize(t).join(" "))
                .ok_or_else(|| Error::BadQuery {
                    query_id: query_id.into(),
                    msg: format!("unknown article title {t:?}"),
                })
        })
        .collect()
}

impl GroundTruthEntry {
    pub fn to_record(&self, graph: &KnowledgeGraph) -> GroundTruthRecord {
        GroundTruthRecord {
            query_id: self.query_id.clone(),
            linked_keywords: titles(graph, &self.linked_keywords),
            chosen: titles(graph, &self.chosen),
            quality: self.quality,
            per_r_precision: self.per_r_precision.clone(),
            rng_seed: self.rng_seed,
        }
    }

    /// Rebuilds an entry from its serialized record. The candidate set is
    /// not serialized; the loaded entry carries the chosen set as its
    /// candidates, which is all downstream stages need.
    pub fn from_record(record: &GroundTruthRecord, graph: &KnowledgeGraph) -> Result<Self> {
        let linked_keywords = resolve_titles(graph, &record.linked_keywords, &record.query_id)?;
        let chosen = resolve_titles(graph, &record.chosen, &record.query_id)?;
        let expansion_set: BTreeSet<NodeId> =
            linked_keywords.union(&chosen).copied().collect();
        Ok(GroundTruthEntry {
            query_id: record.query_id.clone(),
            linked_keywords,
            candidates: chosen.clone(),
            chosen,
            expansion_set,
            quality: record.quality,
            per_r_precision: record.per_r_precision.clone(),
            rng_seed: record.rng_seed,
        })
    }
}

pub fn write_entries_jsonl<W: Write>(
    entries: &[GroundTruthEntry],
    graph: &KnowledgeGraph,
    w: &mut W,
) -> Result<()> {
    for entry in entries {
        let record = entry.to_record(graph);
        let line = serde_json::to_string(&record).map_err(|e| Error::Json {
            path: "<ground-truth>".into(),
            line: 0,
            msg: e.to_string(),
        })?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_records_jsonl<R: BufRead>(reader: R, path: &str) -> Result<Vec<GroundTruthRecord>> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: GroundTruthRecord = serde_json::from_str(&line).map_err(|e| Error::Json {
            path: path.into(),
            line: idx + 1,
            msg: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Articles linked in the query's expected documents: the candidate pool
/// for the local search. Expected documents missing from the link map
/// contribute nothing.
pub fn candidates_for_query(
    query: &Query,
    doc_links: &BTreeMap<String, BTreeSet<NodeId>>,
) -> BTreeSet<NodeId> {
    query
        .expected_docs
        .iter()
        .filter_map(|doc_id| doc_links.get(doc_id))
        .flatten()
        .copied()
        .collect()
}

/// Memoized objective: averaged top-r precision of the linked keywords plus
/// a candidate subset, evaluated by exact-title phrase retrieval.
struct Objective<'a> {
    graph: &'a KnowledgeGraph,
    index: &'a PhraseIndex,
    expected: &'a BTreeSet<String>,
    linked: &'a BTreeSet<NodeId>,
    memo: HashMap<Vec<NodeId>, f64>,
}

impl<'a> Objective<'a> {
    fn new(
        graph: &'a KnowledgeGraph,
        index: &'a PhraseIndex,
        expected: &'a BTreeSet<String>,
        linked: &'a BTreeSet<NodeId>,
    ) -> Self {
        Objective {
            graph,
            index,
            expected,
            linked,
            memo: HashMap::new(),
        }
    }

    fn eval(&mut self, chosen: &BTreeSet<NodeId>) -> f64 {
        let union: BTreeSet<NodeId> = self.linked.union(chosen).copied().collect();
        let key: Vec<NodeId> = union.iter().copied().collect();
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let value = quality_of(self.graph, self.index, &union, self.expected);
        self.memo.insert(key, value);
        value
    }
}

/// Quality of an article set: 0 when its titles yield no phrases at all.
pub fn quality_of(
    graph: &KnowledgeGraph,
    index: &PhraseIndex,
    articles: &BTreeSet<NodeId>,
    expected: &BTreeSet<String>,
) -> f64 {
    let phrases = article_phrases(graph, articles);
    if phrases.is_empty() {
        return 0.0;
    }
    index
        .quality(&phrases, expected)
        .expect("phrase set is non-empty")
}

fn per_r_of(
    graph: &KnowledgeGraph,
    index: &PhraseIndex,
    articles: &BTreeSet<NodeId>,
    expected: &BTreeSet<String>,
) -> BTreeMap<u32, f64> {
    let phrases = article_phrases(graph, articles);
    if phrases.is_empty() {
        return DEFAULT_R_SET.iter().map(|&r| (r, 0.0)).collect();
    }
    index
        .per_r_precision(&phrases, &DEFAULT_R_SET, expected)
        .expect("phrase set is non-empty")
}

/// Local search for the chosen set. Starts from one random candidate picked
/// by `rng_seed`, then alternates two phases until neither applies: strip
/// members whose removal leaves the objective unchanged (smallest id first,
/// repeated to exhaustion — the set should be minimal), and apply the single
/// best strictly improving ADD/REMOVE/SWAP, scanning candidates in
/// ascending id order so ties resolve deterministically.
pub fn local_search(
    query: &Query,
    linked: &BTreeSet<NodeId>,
    candidates: &BTreeSet<NodeId>,
    graph: &KnowledgeGraph,
    index: &PhraseIndex,
    rng_seed: u64,
) -> GroundTruthEntry {
    local_search_with_trace(query, linked, candidates, graph, index, rng_seed).0
}

/// [`local_search`] plus the objective value after the initial seed and
/// after every applied move.
pub fn local_search_with_trace(
    query: &Query,
    linked: &BTreeSet<NodeId>,
    candidates: &BTreeSet<NodeId>,
    graph: &KnowledgeGraph,
    index: &PhraseIndex,
    rng_seed: u64,
) -> (GroundTruthEntry, Vec<f64>) {
    let mut objective = Objective::new(graph, index, &query.expected_docs, linked);
    let candidate_list: Vec<NodeId> = candidates.iter().copied().collect();

    let mut chosen: BTreeSet<NodeId> = BTreeSet::new();
    if !candidate_list.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let seed_idx = rng.gen_range(0..candidate_list.len());
        chosen.insert(candidate_list[seed_idx]);
    }
    let mut trace = vec![objective.eval(&chosen)];

    loop {
        // Neutral removals, smallest id first, re-scanning after each.
        loop {
            let current = objective.eval(&chosen);
            let neutral = chosen.iter().copied().find(|&x| {
                let mut trimmed = chosen.clone();
                trimmed.remove(&x);
                objective.eval(&trimmed) == current
            });
            match neutral {
                Some(x) => {
                    chosen.remove(&x);
                    trace.push(current);
                }
                None => break,
            }
        }

        let current = objective.eval(&chosen);
        let mut best: Option<(f64, BTreeSet<NodeId>)> = None;
        let consider = |value: f64, set: BTreeSet<NodeId>, best: &mut Option<(f64, BTreeSet<NodeId>)>| {
            if value > current && best.as_ref().is_none_or(|(b, _)| value > *b) {
                *best = Some((value, set));
            }
        };
        for &y in candidate_list.iter().filter(|y| !chosen.contains(y)) {
            let mut next = chosen.clone();
            next.insert(y);
            let value = objective.eval(&next);
            consider(value, next, &mut best);
        }
        for &x in &chosen {
            let mut next = chosen.clone();
            next.remove(&x);
            let value = objective.eval(&next);
            consider(value, next, &mut best);
        }
        for &x in &chosen {
            for &y in candidate_list.iter().filter(|y| !chosen.contains(y)) {
                let mut next = chosen.clone();
                next.remove(&x);
                next.insert(y);
                let value = objective.eval(&next);
                consider(value, next, &mut best);
            }
        }

        match best {
            Some((value, set)) => {
                chosen = set;
                trace.push(value);
            }
            None => break,
        }
    }

    let quality = objective.eval(&chosen);
    let expansion_set: BTreeSet<NodeId> = linked.union(&chosen).copied().collect();
    let per_r_precision = per_r_of(graph, index, &expansion_set, &query.expected_docs);
    let entry = GroundTruthEntry {
        query_id: query.query_id.clone(),
        linked_keywords: linked.clone(),
        candidates: candidates.clone(),
        chosen,
        expansion_set,
        quality,
        per_r_precision,
        rng_seed,
    };
    (entry, trace)
}

/// Best of `restarts` runs seeded rng_seed, rng_seed+1, …; ties keep the
/// earliest seed. `restarts` is clamped to at least 1.
pub fn local_search_restarts(
    query: &Query,
    linked: &BTreeSet<NodeId>,
    candidates: &BTreeSet<NodeId>,
    graph: &KnowledgeGraph,
    index: &PhraseIndex,
    rng_seed: u64,
    restarts: u32,
) -> GroundTruthEntry {
    let mut best: Option<GroundTruthEntry> = None;
    for i in 0..u64::from(restarts.max(1)) {
        let entry = local_search(query, linked, candidates, graph, index, rng_seed + i);
        if best.as_ref().is_none_or(|b| entry.quality > b.quality) {
            best = Some(entry);
        }
    }
    best.expect("at least one restart")
}

/// |X(q)| / |L(q.k)|, reported as 0 when no keywords linked.
pub fn expansion_ratio(entry: &GroundTruthEntry) -> f64 {
    if entry.linked_keywords.is_empty() {
        return 0.0;
    }
    entry.expansion_set.len() as f64 / entry.linked_keywords.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    QueryArticle,
    ChosenArticle,
    MainArticle,
    Category,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::QueryArticle => "query_article",
            Role::ChosenArticle => "chosen_article",
            Role::MainArticle => "main_article",
            Role::Category => "category",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        match s {
            "query_article" => Some(Role::QueryArticle),
            "chosen_article" => Some(Role::ChosenArticle),
            "main_article" => Some(Role::MainArticle),
            "category" => Some(Role::Category),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QueryGraph {
    pub query_id: String,
    pub graph: KnowledgeGraph,
    pub node_roles: BTreeMap<NodeId, Role>,
}

impl QueryGraph {
    /// Nodes holding a given role, ascending.
    pub fn nodes_with_role(&self, role: Role) -> BTreeSet<NodeId> {
        self.node_roles
            .iter()
            .filter(|(_, r)| **r == role)
            .map(|(id, _)| *id)
            .collect()
    }
}

/// Induces the query graph: the expansion set, main articles of its
/// redirects, and the categories of all those articles. Roles record why
/// each node is present; a node linked from the keywords outranks one merely
/// chosen, which outranks a main article added for a redirect.
pub fn assemble_query_graph(
    entry: &GroundTruthEntry,
    graph: &KnowledgeGraph,
) -> Result<QueryGraph> {
    let mut nodes: BTreeSet<NodeId> = BTreeSet::new();
    let mut mains: BTreeSet<NodeId> = BTreeSet::new();
    for &id in &entry.expansion_set {
        graph.node(id)?;
        nodes.insert(id);
        mains.insert(graph.resolve_main(id)?);
    }
    nodes.extend(mains.iter().copied());
    let articles: Vec<NodeId> = nodes.iter().copied().collect();
    for id in articles {
        nodes.extend(graph.categories_of(id));
    }

    let subgraph = graph.induced_subgraph(&nodes)?;
    let mut node_roles = BTreeMap::new();
    for &id in &nodes {
        let role = if entry.linked_keywords.contains(&id) {
            Role::QueryArticle
        } else if entry.chosen.contains(&id) {
            Role::ChosenArticle
        } else if mains.contains(&id) {
            Role::MainArticle
        } else {
            Role::Category
        };
        node_roles.insert(id, role);
    }
    Ok(QueryGraph {
        query_id: entry.query_id.clone(),
        graph: subgraph,
        node_roles,
    })
}

pub fn write_roles_tsv<W: Write>(query_graph: &QueryGraph, w: &mut W) -> Result<()> {
    for (id, role) in &query_graph.node_roles {
        writeln!(w, "{id}\t{}", role.as_str())?;
    }
    Ok(())
}

pub fn read_roles_tsv<R: BufRead>(reader: R, path: &str) -> Result<BTreeMap<NodeId, Role>> {
    let mut roles = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split('\t');
        let bad = |msg: &str| Error::MalformedRecord {
            path: path.into(),
            line: idx + 1,
            msg: msg.into(),
        };
        let id: u64 = parts
            .next()
            .ok_or_else(|| bad("missing id"))?
            .parse()
            .map_err(|_| bad("bad node id"))?;
        let role = parts
            .next()
            .and_then(Role::parse)
            .ok_or_else(|| bad("bad role"))?;
        if parts.next().is_some() {
            return Err(bad("trailing fields"));
        }
        roles.insert(NodeId(id), role);
    }
    Ok(roles)
}

/// Largest-connected-component shape of one query graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentMetrics {
    pub query_id: String,
    /// |LCC| / |G|.
    pub pct_size: f64,
    /// Fraction of the query articles inside the LCC.
    pub pct_query: f64,
    /// Fraction of LCC nodes that are articles.
    pub pct_articles: f64,
    /// Fraction of LCC nodes that are categories.
    pub pct_categories: f64,
    /// |X(q) ∩ LCC| / |L(q.k) ∩ LCC|, 0 when no query article landed there.
    pub expansion_ratio: f64,
}

/// Metrics of the largest connected component. Components span every edge
/// kind here — redirects tie a redirect to its main article, and both sit
/// in the query graph.
pub fn component_metrics(query_graph: &QueryGraph) -> ComponentMetrics {
    let zero = ComponentMetrics {
        query_id: query_graph.query_id.clone(),
        pct_size: 0.0,
        pct_query: 0.0,
        pct_articles: 0.0,
        pct_categories: 0.0,
        expansion_ratio: 0.0,
    };
    let total = query_graph.graph.node_count();
    if total == 0 {
        return zero;
    }
    let components = connected_components(&query_graph.graph);
    let Some(lcc) = components.first() else {
        return zero;
    };

    let query_nodes = query_graph.nodes_with_role(Role::QueryArticle);
    let chosen_nodes = query_graph.nodes_with_role(Role::ChosenArticle);
    let query_in_lcc = query_nodes.intersection(lcc).count();
    let expansion_in_lcc = query_in_lcc + chosen_nodes.intersection(lcc).count();
    let articles_in_lcc = lcc
        .iter()
        .filter(|id| query_graph.graph.is_article(**id))
        .count();

    ComponentMetrics {
        query_id: query_graph.query_id.clone(),
        pct_size: lcc.len() as f64 / total as f64,
        pct_query: if query_nodes.is_empty() {
            0.0
        } else {
            query_in_lcc as f64 / query_nodes.len() as f64
        },
        pct_articles: articles_in_lcc as f64 / lcc.len() as f64,
        pct_categories: (lcc.len() - articles_in_lcc) as f64 / lcc.len() as f64,
        expansion_ratio: if query_in_lcc == 0 {
            0.0
        } else {
            expansion_in_lcc as f64 / query_in_lcc as f64
        },
    }
}

/// Min/quartile/max summary of one metric across query graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSummary {
    pub metric: &'static str,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// The five component-summary rows: component size share, query-article coverage,
/// article share, category share, and in-component expansion ratio.
pub fn summarize_components(rows: &[ComponentMetrics]) -> Vec<ComponentSummary> {
    let extract: [(&'static str, fn(&ComponentMetrics) -> f64); 5] = [
        ("pct_size", |m| m.pct_size),
        ("pct_query", |m| m.pct_query),
        ("pct_articles", |m| m.pct_articles),
        ("pct_categories", |m| m.pct_categories),
        ("expansion_ratio", |m| m.expansion_ratio),
    ];
    extract
        .iter()
        .map(|(metric, f)| {
            let mut values: Vec<f64> = rows.iter().map(f).collect();
            values.sort_by(f64::total_cmp);
            let q = |p: f64| quantile(&values, p).unwrap_or(0.0);
            ComponentSummary {
                metric,
                min: q(0.0),
                q1: q(0.25),
                median: q(0.5),
                q3: q(0.75),
                max: q(1.0),
            }
        })
        .collect()
}
