//! Cycle structure of query graphs.
//!
//! A cycle here is a simple closed walk of 2 to 5 distinct nodes over the
//! undirected view of the graph with redirect pointers excluded — a redirect
//! node's only outgoing edge points at its main article, so a redirect edge
//! can never close a loop on its own. Length-2 cycles need an edge in each
//! direction between the pair. Every cycle is stored once, in a canonical
//! node order (the lexicographically smallest rotation of either traversal
//! direction), and carries the structural metrics derived from the subgraph
//! its nodes induce.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kgraph::{EdgeKind, KnowledgeGraph, NodeId};
use crate::retrieval::PhraseIndex;

#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    /// Canonical node order; rotating or reflecting it yields the same cycle.
    pub node_seq: Vec<NodeId>,
    pub length: usize,
    pub n_articles: usize,
    pub n_categories: usize,
    pub induced_edges: usize,
    pub category_ratio: f64,
    pub extra_edge_density: f64,
}

impl Cycle {
    pub fn node_set(&self) -> BTreeSet<NodeId> {
        self.node_seq.iter().copied().collect()
    }

    /// Article members, ascending.
    pub fn articles(&self, graph: &KnowledgeGraph) -> BTreeSet<NodeId> {
        self.node_seq
            .iter()
            .copied()
            .filter(|id| graph.is_article(*id))
            .collect()
    }

    fn build(seq: Vec<NodeId>, graph: &KnowledgeGraph) -> Cycle {
        let length = seq.len();
        let n_articles = seq.iter().filter(|id| graph.is_article(**id)).count();
        let n_categories = length - n_articles;
        let induced_edges = induced_edge_count(&seq, graph);
        Cycle {
            category_ratio: n_categories as f64 / length as f64,
            extra_edge_density: extra_edge_density(
                induced_edges,
                length,
                n_articles,
                n_categories,
            ),
            node_seq: seq,
            length,
            n_articles,
            n_categories,
            induced_edges,
        }
    }
}

/// Lexicographically smallest rotation of the sequence or its reverse.
pub fn canonicalize(seq: &[NodeId]) -> Vec<NodeId> {
    let n = seq.len();
    let mut best: Option<Vec<NodeId>> = None;
    let mut consider = |candidate: Vec<NodeId>| {
        if best.as_ref().is_none_or(|b| candidate < *b) {
            best = Some(candidate);
        }
    };
    for start in 0..n {
        let forward: Vec<NodeId> = (0..n).map(|i| seq[(start + i) % n]).collect();
        let backward: Vec<NodeId> = (0..n).map(|i| seq[(start + n - i) % n]).collect();
        consider(forward);
        consider(backward);
    }
    best.unwrap_or_default()
}

/// Undirected connected components over every edge kind, largest first,
/// ties broken by smallest member id.
pub fn connected_components(graph: &KnowledgeGraph) -> Vec<BTreeSet<NodeId>> {
    let mut unvisited: BTreeSet<NodeId> = graph.nodes().map(|n| n.id()).collect();
    let mut components = Vec::new();
    while let Some(&start) = unvisited.iter().next() {
        let mut component = BTreeSet::new();
        let mut stack = vec![start];
        unvisited.remove(&start);
        while let Some(id) = stack.pop() {
            component.insert(id);
            let neighbors = graph
                .undirected_neighbors(id, false)
                .expect("component member exists");
            for nb in neighbors {
                if unvisited.remove(&nb) {
                    stack.push(nb);
                }
            }
        }
        components.push(component);
    }
    components.sort_by(|a, b| {
        b.len()
            .cmp(&a.len())
            .then_with(|| a.iter().next().cmp(&b.iter().next()))
    });
    components
}

fn collapsed_adjacency(graph: &KnowledgeGraph) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for node in graph.nodes() {
        adj.insert(node.id(), BTreeSet::new());
    }
    for edge in graph.edges() {
        if edge.src == edge.dst {
            continue;
        }
        adj.get_mut(&edge.src).expect("endpoint exists").insert(edge.dst);
        adj.get_mut(&edge.dst).expect("endpoint exists").insert(edge.src);
    }
    adj
}

/// Fraction of nodes sitting in at least one triangle of the collapsed
/// undirected graph (edge kinds and directions ignored). 0 for an empty
/// graph.
pub fn tpr(graph: &KnowledgeGraph) -> f64 {
    let adj = collapsed_adjacency(graph);
    if adj.is_empty() {
        return 0.0;
    }
    let mut in_triangle: BTreeSet<NodeId> = BTreeSet::new();
    for (&u, nbs) in &adj {
        if in_triangle.contains(&u) {
            continue;
        }
        // A neighbor pair of u that is itself adjacent closes a triangle;
        // u never sits in its own neighbor set, so no exclusion needed.
        'search: for v in nbs {
            if let Some(&w) = adj[v].intersection(nbs).next() {
                in_triangle.extend([u, *v, w]);
                break 'search;
            }
        }
    }
    in_triangle.len() as f64 / adj.len() as f64
}

fn non_redirect_adjacency(graph: &KnowledgeGraph) -> BTreeMap<NodeId, Vec<NodeId>> {
    let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for node in graph.nodes() {
        adj.insert(node.id(), BTreeSet::new());
    }
    for edge in graph.edges() {
        if edge.kind == EdgeKind::Redirect || edge.src == edge.dst {
            continue;
        }
        adj.get_mut(&edge.src).expect("endpoint exists").insert(edge.dst);
        adj.get_mut(&edge.dst).expect("endpoint exists").insert(edge.src);
    }
    adj.into_iter()
        .map(|(id, set)| (id, set.into_iter().collect()))
        .collect()
}

fn reciprocal_non_redirect(graph: &KnowledgeGraph, a: NodeId, b: NodeId) -> bool {
    let one_way = |src, dst| {
        [EdgeKind::Link, EdgeKind::BelongsTo, EdgeKind::Inside]
            .iter()
            .any(|&kind| graph.has_edge(src, dst, kind))
    };
    one_way(a, b) && one_way(b, a)
}

/// All simple cycles of length 2..=max_len containing at least one seed,
/// deduplicated by canonical form and sorted by (length, node sequence).
///
/// Seeds must be article nodes. Each seed's depth-bounded search runs in
/// parallel; a seed's search skips every smaller seed, whose cycles were
/// already found, and a cycle found from both directions is kept once by
/// requiring the second node to sort below the last.
pub fn enumerate_cycles(
    graph: &KnowledgeGraph,
    seeds: &BTreeSet<NodeId>,
    max_len: usize,
) -> Result<Vec<Cycle>> {
    if max_len < 2 {
        return Err(Error::BadMaxLen(max_len));
    }
    for &seed in seeds {
        graph.node(seed)?;
        if !graph.is_article(seed) {
            return Err(Error::SeedNotArticle(seed.0));
        }
    }
    let adj = non_redirect_adjacency(graph);
    let seed_list: Vec<NodeId> = seeds.iter().copied().collect();

    let per_seed: Vec<BTreeSet<Vec<NodeId>>> = seed_list
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| {
            let blocked: BTreeSet<NodeId> = seed_list[..i].iter().copied().collect();
            cycles_from_seed(graph, &adj, seed, &blocked, max_len)
        })
        .collect();

    let mut canonical: BTreeSet<Vec<NodeId>> = BTreeSet::new();
    for set in per_seed {
        canonical.extend(set);
    }
    let mut cycles: Vec<Cycle> = canonical
        .into_iter()
        .map(|seq| Cycle::build(seq, graph))
        .collect();
    cycles.sort_by(|a, b| a.length.cmp(&b.length).then_with(|| a.node_seq.cmp(&b.node_seq)));
    Ok(cycles)
}

fn cycles_from_seed(
    graph: &KnowledgeGraph,
    adj: &BTreeMap<NodeId, Vec<NodeId>>,
    seed: NodeId,
    blocked: &BTreeSet<NodeId>,
    max_len: usize,
) -> BTreeSet<Vec<NodeId>> {
    let mut found: BTreeSet<Vec<NodeId>> = BTreeSet::new();
    let empty: Vec<NodeId> = Vec::new();
    let neighbors = |id: NodeId| adj.get(&id).unwrap_or(&empty);

    for &nb in neighbors(seed) {
        if !blocked.contains(&nb) && reciprocal_non_redirect(graph, seed, nb) {
            found.insert(canonicalize(&[seed, nb]));
        }
    }
    if max_len < 3 {
        return found;
    }

    let mut path = vec![seed];
    let mut stack: Vec<(NodeId, usize)> = neighbors(seed)
        .iter()
        .filter(|nb| !blocked.contains(nb))
        .map(|&nb| (nb, 1))
        .collect();
    while let Some((node, depth)) = stack.pop() {
        path.truncate(depth);
        path.push(node);
        let closes = path.len() >= 3 && neighbors(node).binary_search(&seed).is_ok();
        if closes && path[1] < path[path.len() - 1] {
            found.insert(canonicalize(&path));
        }
        if path.len() < max_len {
            for &next in neighbors(node) {
                if next != seed && !blocked.contains(&next) && !path.contains(&next) {
                    stack.push((next, depth + 1));
                }
            }
        }
    }
    found
}

/// Edge count of the subgraph induced by the cycle's nodes: article links
/// counted per direction, article–category memberships once each, and
/// category containments once per unordered pair. Redirect pointers never
/// count.
pub fn induced_edge_count(nodes: &[NodeId], graph: &KnowledgeGraph) -> usize {
    let mut count = 0;
    for (i, &u) in nodes.iter().enumerate() {
        for &v in &nodes[i + 1..] {
            count += usize::from(graph.has_edge(u, v, EdgeKind::Link));
            count += usize::from(graph.has_edge(v, u, EdgeKind::Link));
            count += usize::from(
                graph.has_edge(u, v, EdgeKind::BelongsTo)
                    || graph.has_edge(v, u, EdgeKind::BelongsTo),
            );
            count += usize::from(
                graph.has_edge(u, v, EdgeKind::Inside) || graph.has_edge(v, u, EdgeKind::Inside),
            );
        }
    }
    count
}

/// Most edges a node set with this composition can induce: ordered article
/// pairs, article–category memberships, unordered category pairs.
pub fn max_edges(n_articles: usize, n_categories: usize) -> usize {
    n_articles * n_articles.saturating_sub(1)
        + n_articles * n_categories
        + n_categories * n_categories.saturating_sub(1) / 2
}

/// Share of the possible extra edges (beyond the cycle itself) actually
/// present: (ℰ − |C|) / (M − |C|), or 0 when no extra edge is possible.
pub fn extra_edge_density(
    induced_edges: usize,
    length: usize,
    n_articles: usize,
    n_categories: usize,
) -> f64 {
    let max = max_edges(n_articles, n_categories);
    if max == length {
        return 0.0;
    }
    (induced_edges as f64 - length as f64) / (max as f64 - length as f64)
}

/// Percent change in retrieval quality when the cycle's articles join the
/// linked keywords. A zero baseline falls back to 100·O₂ so an improving
/// cycle still reports a positive number.
pub fn contribution_percent(baseline: f64, expanded: f64) -> f64 {
    if baseline > 0.0 {
        100.0 * (expanded - baseline) / baseline
    } else {
        100.0 * expanded
    }
}

/// [`contribution_percent`] with both qualities computed from the index:
/// baseline is the linked keywords alone, expanded adds the cycle's
/// articles.
pub fn cycle_contribution(
    cycle: &Cycle,
    linked: &BTreeSet<NodeId>,
    expected: &BTreeSet<String>,
    graph: &KnowledgeGraph,
    index: &PhraseIndex,
) -> f64 {
    let baseline = crate::groundtruth::quality_of(graph, index, linked, expected);
    let mut union = linked.clone();
    union.extend(cycle.articles(graph));
    let expanded = crate::groundtruth::quality_of(graph, index, &union, expected);
    contribution_percent(baseline, expanded)
}

/// Unordered article pairs linked in both directions, as a share of the
/// unordered article pairs linked at all. 0 when nothing is linked.
pub fn reciprocal_pair_ratio(graph: &KnowledgeGraph) -> f64 {
    let mut linked_pairs: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    let mut ordered: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for edge in graph.edges() {
        if edge.kind != EdgeKind::Link {
            continue;
        }
        ordered.insert((edge.src, edge.dst));
        let pair = if edge.src < edge.dst {
            (edge.src, edge.dst)
        } else {
            (edge.dst, edge.src)
        };
        linked_pairs.insert(pair);
    }
    if linked_pairs.is_empty() {
        return 0.0;
    }
    let reciprocal = linked_pairs
        .iter()
        .filter(|(a, b)| ordered.contains(&(*a, *b)) && ordered.contains(&(*b, *a)))
        .count();
    reciprocal as f64 / linked_pairs.len() as f64
}

/// One enumerated cycle in the context of its query.
#[derive(Debug, Clone)]
pub struct CycleRecord {
    pub query_id: String,
    pub cycle: Cycle,
    pub contribution: f64,
}

/// Per-length aggregate over a set of cycle records.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthAggregate {
    pub length: usize,
    pub count: usize,
    pub mean_contribution: f64,
    pub mean_category_ratio: f64,
    pub mean_extra_edge_density: f64,
}

/// Aggregates where every cycle weighs equally.
pub fn aggregate_by_length(records: &[CycleRecord]) -> Vec<LengthAggregate> {
    let mut by_length: BTreeMap<usize, Vec<&CycleRecord>> = BTreeMap::new();
    for record in records {
        by_length.entry(record.cycle.length).or_default().push(record);
    }
    by_length
        .into_iter()
        .map(|(length, group)| {
            let n = group.len() as f64;
            LengthAggregate {
                length,
                count: group.len(),
                mean_contribution: group.iter().map(|r| r.contribution).sum::<f64>() / n,
                mean_category_ratio: group.iter().map(|r| r.cycle.category_ratio).sum::<f64>()
                    / n,
                mean_extra_edge_density: group
                    .iter()
                    .map(|r| r.cycle.extra_edge_density)
                    .sum::<f64>()
                    / n,
            }
        })
        .collect()
}

/// Contribution aggregated per query first (each query weighs equally),
/// then averaged across queries: (length, queries having that length,
/// mean of per-query means).
pub fn contribution_by_length_per_query(records: &[CycleRecord]) -> Vec<(usize, usize, f64)> {
    let mut per_query: BTreeMap<(usize, &str), Vec<f64>> = BTreeMap::new();
    for record in records {
        per_query
            .entry((record.cycle.length, record.query_id.as_str()))
            .or_default()
            .push(record.contribution);
    }
    let mut by_length: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for ((length, _), contributions) in per_query {
        let mean = contributions.iter().sum::<f64>() / contributions.len() as f64;
        by_length.entry(length).or_default().push(mean);
    }
    by_length
        .into_iter()
        .map(|(length, means)| {
            (
                length,
                means.len(),
                means.iter().sum::<f64>() / means.len() as f64,
            )
        })
        .collect()
}
