//! Typed article/category graph storage.
//!
//! Nodes are articles (possibly redirects) or categories. Edges are typed:
//! article-to-article links, redirect pointers, article-to-category
//! membership, and category-to-category containment. Loading validates the
//! schema invariants; subgraphs produced by [`KnowledgeGraph::induced_subgraph`]
//! keep the type rules but drop the completeness requirements (a redirect may
//! lose its pointer, an article may lose all its categories).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linker::normalize;

/// Graph node identifier. Ids come from the input files and are stable
/// across runs; all deterministic orderings in this crate sort by id.
#[repr(transparent)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    Link,
    Redirect,
    BelongsTo,
    Inside,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Link => "link",
            EdgeKind::Redirect => "redirect",
            EdgeKind::BelongsTo => "belongs",
            EdgeKind::Inside => "inside",
        }
    }

    fn parse(s: &str) -> Option<EdgeKind> {
        match s {
            "link" => Some(EdgeKind::Link),
            "redirect" => Some(EdgeKind::Redirect),
            "belongs" => Some(EdgeKind::BelongsTo),
            "inside" => Some(EdgeKind::Inside),
            _ => None,
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone)]
pub struct Article {
    pub id: NodeId,
    pub title: String,
    pub normalized_title: String,
    pub is_redirect: bool,
}

#[derive(Debug, Clone)]
pub struct Category {
    pub id: NodeId,
    pub name: String,
    pub normalized_name: String,
}

#[derive(Debug, Clone)]
pub enum Node {
    Article(Article),
    Category(Category),
}

impl Node {
    pub fn id(&self) -> NodeId {
        match self {
            Node::Article(a) => a.id,
            Node::Category(c) => c.id,
        }
    }

    /// Raw title for articles, raw name for categories.
    pub fn label(&self) -> &str {
        match self {
            Node::Article(a) => &a.title,
            Node::Category(c) => &c.name,
        }
    }

    pub fn normalized_label(&self) -> &str {
        match self {
            Node::Article(a) => &a.normalized_title,
            Node::Category(c) => &c.normalized_name,
        }
    }
}

/// Node record kind as spelled in the input files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Article,
    Category,
    Redirect,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Article => "article",
            RecordKind::Category => "category",
            RecordKind::Redirect => "redirect",
        }
    }

    fn parse(s: &str) -> Option<RecordKind> {
        match s {
            "article" => Some(RecordKind::Article),
            "category" => Some(RecordKind::Category),
            "redirect" => Some(RecordKind::Redirect),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NodeRecord {
    pub id: u64,
    pub kind: RecordKind,
    pub title: String,
}

/// How much of the schema to enforce when building a graph.
///
/// `Strict` is the contract for freshly loaded graphs. `Relaxed` keeps the
/// edge typing rules but drops the completeness requirements, which is what
/// induced subgraphs need: removing nodes can strip a redirect of its pointer
/// or an article of all its categories without making the subgraph invalid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validation {
    Strict,
    Relaxed,
}

#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    nodes: BTreeMap<NodeId, Node>,
    edges: BTreeSet<Edge>,
    out: BTreeMap<NodeId, Vec<Edge>>,
    inc: BTreeMap<NodeId, Vec<Edge>>,
    article_titles: HashMap<String, NodeId>,
    category_names: HashMap<String, NodeId>,
    max_title_tokens: usize,
}

impl KnowledgeGraph {
    /// Loads and validates a graph from a node file and an edge file.
    ///
    /// Each file is either TSV (`id<TAB>kind<TAB>title` / `src<TAB>dst<TAB>kind`)
    /// or JSON lines with the same fields; the format is sniffed per file from
    /// the first non-blank byte.
    pub fn load(nodes_path: &Path, edges_path: &Path) -> Result<KnowledgeGraph> {
        let records = read_node_file(nodes_path)?;
        let edges = read_edge_file(edges_path)?;
        KnowledgeGraph::from_parts(records, edges, Validation::Strict)
    }

    pub fn from_parts(
        records: Vec<NodeRecord>,
        edge_list: Vec<(u64, u64, EdgeKind)>,
        validation: Validation,
    ) -> Result<KnowledgeGraph> {
        let mut nodes: BTreeMap<NodeId, Node> = BTreeMap::new();
        let mut article_titles: HashMap<String, NodeId> = HashMap::new();
        let mut category_names: HashMap<String, NodeId> = HashMap::new();
        let mut max_title_tokens = 0;

        for rec in records {
            let id = NodeId(rec.id);
            if nodes.contains_key(&id) {
                return Err(Error::DuplicateNode(rec.id));
            }
            if rec.title.is_empty() {
                return Err(Error::InvariantViolation {
                    node: rec.id,
                    msg: "empty title".into(),
                });
            }
            let tokens = normalize(&rec.title);
            let norm = tokens.join(" ");
            let node = match rec.kind {
                RecordKind::Article | RecordKind::Redirect => {
                    if let Some(&first) = article_titles.get(&norm) {
                        return Err(Error::DuplicateTitle {
                            title: norm,
                            first: first.0,
                            second: rec.id,
                        });
                    }
                    article_titles.insert(norm.clone(), id);
                    max_title_tokens = max_title_tokens.max(tokens.len());
                    Node::Article(Article {
                        id,
                        title: rec.title,
                        normalized_title: norm,
                        is_redirect: rec.kind == RecordKind::Redirect,
                    })
                }
                RecordKind::Category => {
                    if let Some(&first) = category_names.get(&norm) {
                        return Err(Error::DuplicateTitle {
                            title: norm,
                            first: first.0,
                            second: rec.id,
                        });
                    }
                    category_names.insert(norm.clone(), id);
                    Node::Category(Category {
                        id,
                        name: rec.title,
                        normalized_name: norm,
                    })
                }
            };
            nodes.insert(id, node);
        }

        let mut edges: BTreeSet<Edge> = BTreeSet::new();
        for (src, dst, kind) in edge_list {
            let edge = Edge {
                src: NodeId(src),
                dst: NodeId(dst),
                kind,
            };
            let src_node = nodes.get(&edge.src).ok_or(Error::UnknownEndpoint(src))?;
            let dst_node = nodes.get(&edge.dst).ok_or(Error::UnknownEndpoint(dst))?;
            let src_is_article = matches!(src_node, Node::Article(_));
            let dst_is_article = matches!(dst_node, Node::Article(_));
            let type_ok = match kind {
                EdgeKind::Link | EdgeKind::Redirect => {
                    src_is_article && dst_is_article && src != dst
                }
                EdgeKind::BelongsTo => src_is_article && !dst_is_article,
                EdgeKind::Inside => !src_is_article && !dst_is_article && src != dst,
            };
            if !type_ok {
                return Err(Error::InvariantViolation {
                    node: src,
                    msg: format!(
                        "{} edge to {} violates endpoint typing",
                        kind.as_str(),
                        dst
                    ),
                });
            }
            if !edges.insert(edge) {
                return Err(Error::DuplicateEdge {
                    src,
                    dst,
                    kind: kind.as_str().into(),
                });
            }
        }

        let mut out: BTreeMap<NodeId, Vec<Edge>> = BTreeMap::new();
        let mut inc: BTreeMap<NodeId, Vec<Edge>> = BTreeMap::new();
        for &edge in &edges {
            out.entry(edge.src).or_default().push(edge);
            inc.entry(edge.dst).or_default().push(edge);
        }

        let graph = KnowledgeGraph {
            nodes,
            edges,
            out,
            inc,
            article_titles,
            category_names,
            max_title_tokens,
        };

        if validation == Validation::Strict {
            graph.check_completeness()?;
        }
        Ok(graph)
    }

    /// Completeness rules: a redirect has exactly one outgoing redirect edge
    /// and nothing else outgoing; a plain article belongs to at least one
    /// category.
    fn check_completeness(&self) -> Result<()> {
        for node in self.nodes.values() {
            let Node::Article(a) = node else { continue };
            let out = self.out_edges(a.id);
            if a.is_redirect {
                let redirects = out.iter().filter(|e| e.kind == EdgeKind::Redirect).count();
                if redirects != 1 {
                    return Err(Error::InvariantViolation {
                        node: a.id.0,
                        msg: format!(
                            "redirect must have exactly one redirect edge, found {redirects}"
                        ),
                    });
                }
                if out.iter().any(|e| e.kind == EdgeKind::BelongsTo) {
                    return Err(Error::InvariantViolation {
                        node: a.id.0,
                        msg: "redirect has a category".into(),
                    });
                }
                if out.iter().any(|e| e.kind == EdgeKind::Link) {
                    return Err(Error::InvariantViolation {
                        node: a.id.0,
                        msg: "redirect has outgoing links".into(),
                    });
                }
            } else {
                if !out.iter().any(|e| e.kind == EdgeKind::BelongsTo) {
                    return Err(Error::InvariantViolation {
                        node: a.id.0,
                        msg: "article without category".into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes.get(&id).ok_or(Error::UnknownNode(id.0))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn articles(&self) -> impl Iterator<Item = &Article> {
        self.nodes.values().filter_map(|n| match n {
            Node::Article(a) => Some(a),
            Node::Category(_) => None,
        })
    }

    pub fn categories(&self) -> impl Iterator<Item = &Category> {
        self.nodes.values().filter_map(|n| match n {
            Node::Category(c) => Some(c),
            Node::Article(_) => None,
        })
    }

    pub fn is_article(&self, id: NodeId) -> bool {
        matches!(self.nodes.get(&id), Some(Node::Article(_)))
    }

    pub fn is_category(&self, id: NodeId) -> bool {
        matches!(self.nodes.get(&id), Some(Node::Category(_)))
    }

    pub fn is_redirect(&self, id: NodeId) -> bool {
        matches!(self.nodes.get(&id), Some(Node::Article(a)) if a.is_redirect)
    }

    pub fn out_edges(&self, id: NodeId) -> &[Edge] {
        self.out.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn in_edges(&self, id: NodeId) -> &[Edge] {
        self.inc.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_edge(&self, src: NodeId, dst: NodeId, kind: EdgeKind) -> bool {
        self.edges.contains(&Edge { src, dst, kind })
    }

    /// Article lookup by normalized title (tokens joined by single spaces).
    pub fn article_by_normalized_title(&self, norm: &str) -> Option<NodeId> {
        self.article_titles.get(norm).copied()
    }

    pub fn category_by_normalized_name(&self, norm: &str) -> Option<NodeId> {
        self.category_names.get(norm).copied()
    }

    /// Longest article title, in tokens. Bounds the linker's scan window.
    pub fn max_title_tokens(&self) -> usize {
        self.max_title_tokens
    }

    /// Redirect articles pointing directly at `id`, ascending by node id.
    pub fn redirects_to(&self, id: NodeId) -> Vec<NodeId> {
        self.in_edges(id)
            .iter()
            .filter(|e| e.kind == EdgeKind::Redirect)
            .map(|e| e.src)
            .collect()
    }

    /// Categories an article directly belongs to, ascending by node id.
    pub fn categories_of(&self, id: NodeId) -> Vec<NodeId> {
        self.out_edges(id)
            .iter()
            .filter(|e| e.kind == EdgeKind::BelongsTo)
            .map(|e| e.dst)
            .collect()
    }

    /// Follows redirect pointers transitively to the main article.
    /// Non-redirect nodes resolve to themselves.
    pub fn resolve_main(&self, id: NodeId) -> Result<NodeId> {
        let mut current = id;
        let mut seen: HashSet<NodeId> = HashSet::new();
        loop {
            match self.node(current)? {
                Node::Article(a) if a.is_redirect => {
                    if !seen.insert(current) {
                        return Err(Error::RedirectLoop(id.0));
                    }
                    let target = self
                        .out_edges(current)
                        .iter()
                        .find(|e| e.kind == EdgeKind::Redirect)
                        .map(|e| e.dst);
                    match target {
                        Some(t) => current = t,
                        // A relaxed subgraph may hold a redirect stripped of
                        // its pointer; it then resolves to itself.
                        None => return Ok(current),
                    }
                }
                _ => return Ok(current),
            }
        }
    }

    /// Neighbors over edges in either direction. `exclude_redirect_edges`
    /// drops redirect pointers from consideration, which is how the cycle
    /// machinery views the graph.
    pub fn undirected_neighbors(
        &self,
        id: NodeId,
        exclude_redirect_edges: bool,
    ) -> Result<BTreeSet<NodeId>> {
        if !self.contains(id) {
            return Err(Error::UnknownNode(id.0));
        }
        let keep = |e: &Edge| !(exclude_redirect_edges && e.kind == EdgeKind::Redirect);
        let mut set = BTreeSet::new();
        for e in self.out_edges(id).iter().filter(|e| keep(e)) {
            set.insert(e.dst);
        }
        for e in self.in_edges(id).iter().filter(|e| keep(e)) {
            set.insert(e.src);
        }
        Ok(set)
    }

    /// Subgraph on `keep`, retaining edges with both endpoints kept.
    /// The result is validated with relaxed rules.
    pub fn induced_subgraph(&self, keep: &BTreeSet<NodeId>) -> Result<KnowledgeGraph> {
        let mut records = Vec::with_capacity(keep.len());
        for &id in keep {
            let node = self.node(id)?;
            let rec = match node {
                Node::Article(a) => NodeRecord {
                    id: id.0,
                    kind: if a.is_redirect {
                        RecordKind::Redirect
                    } else {
                        RecordKind::Article
                    },
                    title: a.title.clone(),
                },
                Node::Category(c) => NodeRecord {
                    id: id.0,
                    kind: RecordKind::Category,
                    title: c.name.clone(),
                },
            };
            records.push(rec);
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| keep.contains(&e.src) && keep.contains(&e.dst))
            .map(|e| (e.src.0, e.dst.0, e.kind))
            .collect();
        KnowledgeGraph::from_parts(records, edges, Validation::Relaxed)
    }

    /// Writes the node table as TSV, sorted by id.
    pub fn write_nodes_tsv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for node in self.nodes.values() {
            let kind = match node {
                Node::Article(a) if a.is_redirect => "redirect",
                Node::Article(_) => "article",
                Node::Category(_) => "category",
            };
            writeln!(w, "{}\t{}\t{}", node.id(), kind, node.label())?;
        }
        Ok(())
    }

    /// Writes the edge table as TSV, sorted by (src, dst, kind).
    pub fn write_edges_tsv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for e in &self.edges {
            writeln!(w, "{}\t{}\t{}", e.src, e.dst, e.kind.as_str())?;
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct NodeJson {
    id: u64,
    kind: String,
    title: String,
}

#[derive(Deserialize)]
struct EdgeJson {
    src: u64,
    dst: u64,
    kind: String,
}

fn is_jsonl(first_line: &str) -> bool {
    first_line.trim_start().starts_with('{')
}

pub fn read_node_file(path: &Path) -> Result<Vec<NodeRecord>> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let display = path.display().to_string();
    let mut records = Vec::new();
    let mut format: Option<bool> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let jsonl = *format.get_or_insert_with(|| is_jsonl(&line));
        if jsonl {
            let rec: NodeJson = serde_json::from_str(&line).map_err(|e| Error::Json {
                path: display.clone(),
                line: lineno,
                msg: e.to_string(),
            })?;
            let kind = RecordKind::parse(&rec.kind).ok_or_else(|| Error::MalformedRecord {
                path: display.clone(),
                line: lineno,
                msg: format!("unknown node kind {:?}", rec.kind),
            })?;
            records.push(NodeRecord {
                id: rec.id,
                kind,
                title: rec.title,
            });
        } else {
            let mut parts = line.splitn(3, '\t');
            let (id, kind, title) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => {
                    return Err(Error::MalformedRecord {
                        path: display,
                        line: lineno,
                        msg: "expected id<TAB>kind<TAB>title".into(),
                    })
                }
            };
            let id: u64 = id.parse().map_err(|_| Error::MalformedRecord {
                path: display.clone(),
                line: lineno,
                msg: format!("invalid node id {id:?}"),
            })?;
            let kind = RecordKind::parse(kind).ok_or_else(|| Error::MalformedRecord {
                path: display.clone(),
                line: lineno,
                msg: format!("unknown node kind {kind:?}"),
            })?;
            records.push(NodeRecord {
                id,
                kind,
                title: title.to_string(),
            });
        }
    }
    Ok(records)
}

pub fn read_edge_file(path: &Path) -> Result<Vec<(u64, u64, EdgeKind)>> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let display = path.display().to_string();
    let mut edges = Vec::new();
    let mut format: Option<bool> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let jsonl = *format.get_or_insert_with(|| is_jsonl(&line));
        if jsonl {
            let rec: EdgeJson = serde_json::from_str(&line).map_err(|e| Error::Json {
                path: display.clone(),
                line: lineno,
                msg: e.to_string(),
            })?;
            let kind = EdgeKind::parse(&rec.kind).ok_or_else(|| Error::MalformedRecord {
                path: display.clone(),
                line: lineno,
                msg: format!("unknown edge kind {:?}", rec.kind),
            })?;
            edges.push((rec.src, rec.dst, kind));
        } else {
            let mut parts = line.splitn(3, '\t');
            let (src, dst, kind) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => {
                    return Err(Error::MalformedRecord {
                        path: display,
                        line: lineno,
                        msg: "expected src<TAB>dst<TAB>kind".into(),
                    })
                }
            };
            let src: u64 = src.parse().map_err(|_| Error::MalformedRecord {
                path: display.clone(),
                line: lineno,
                msg: format!("invalid node id {src:?}"),
            })?;
            let dst: u64 = dst.parse().map_err(|_| Error::MalformedRecord {
                path: display.clone(),
                line: lineno,
                msg: format!("invalid node id {dst:?}"),
            })?;
            let kind = EdgeKind::parse(kind.trim_end()).ok_or_else(|| Error::MalformedRecord {
                path: display.clone(),
                line: lineno,
                msg: format!("unknown edge kind {kind:?}"),
            })?;
            edges.push((src, dst, kind));
        }
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: u64, kind: RecordKind, title: &str) -> NodeRecord {
        NodeRecord {
            id,
            kind,
            title: title.to_string(),
        }
    }

    fn small_graph() -> KnowledgeGraph {
        // venice (main) <- venezia (redirect); gondola links to venice;
        // both articles sit in one category tree.
        let records = vec![
            rec(1, RecordKind::Article, "Venice"),
            rec(2, RecordKind::Article, "Gondola"),
            rec(3, RecordKind::Redirect, "Venezia"),
            rec(10, RecordKind::Category, "Cities"),
            rec(11, RecordKind::Category, "Transport"),
        ];
        let edges = vec![
            (1, 10, EdgeKind::BelongsTo),
            (2, 11, EdgeKind::BelongsTo),
            (2, 1, EdgeKind::Link),
            (3, 1, EdgeKind::Redirect),
            (11, 10, EdgeKind::Inside),
        ];
        KnowledgeGraph::from_parts(records, edges, Validation::Strict).unwrap()
    }

    #[test]
    fn builds_and_indexes_titles() {
        let g = small_graph();
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.edge_count(), 5);
        assert_eq!(g.article_by_normalized_title("venice"), Some(NodeId(1)));
        assert_eq!(g.article_by_normalized_title("venezia"), Some(NodeId(3)));
        assert_eq!(g.category_by_normalized_name("cities"), Some(NodeId(10)));
        assert_eq!(g.max_title_tokens(), 1);
    }

    #[test]
    fn redirect_with_category_is_rejected() {
        let records = vec![
            rec(1, RecordKind::Article, "Venice"),
            rec(3, RecordKind::Redirect, "Venezia"),
            rec(10, RecordKind::Category, "Cities"),
        ];
        let edges = vec![
            (1, 10, EdgeKind::BelongsTo),
            (3, 1, EdgeKind::Redirect),
            (3, 10, EdgeKind::BelongsTo),
        ];
        let err = KnowledgeGraph::from_parts(records, edges, Validation::Strict).unwrap_err();
        assert!(
            err.to_string().contains("redirect has a category"),
            "unexpected error: {err}"
        );
    }

    #[test]
    fn article_without_category_is_rejected() {
        let records = vec![rec(1, RecordKind::Article, "Venice")];
        let err = KnowledgeGraph::from_parts(records, vec![], Validation::Strict).unwrap_err();
        assert!(
            err.to_string().contains("article without category"),
            "unexpected error: {err}"
        );
    }

    #[test]
    fn duplicate_edges_are_rejected() {
        let records = vec![
            rec(1, RecordKind::Article, "Venice"),
            rec(2, RecordKind::Article, "Gondola"),
            rec(10, RecordKind::Category, "Cities"),
        ];
        let edges = vec![
            (1, 10, EdgeKind::BelongsTo),
            (2, 10, EdgeKind::BelongsTo),
            (2, 1, EdgeKind::Link),
            (2, 1, EdgeKind::Link),
        ];
        let err = KnowledgeGraph::from_parts(records, edges, Validation::Strict).unwrap_err();
        assert!(matches!(err, Error::DuplicateEdge { .. }));
    }

    #[test]
    fn inside_cycles_are_allowed() {
        let records = vec![
            rec(1, RecordKind::Article, "A"),
            rec(10, RecordKind::Category, "X"),
            rec(11, RecordKind::Category, "Y"),
        ];
        let edges = vec![
            (1, 10, EdgeKind::BelongsTo),
            (10, 11, EdgeKind::Inside),
            (11, 10, EdgeKind::Inside),
        ];
        assert!(KnowledgeGraph::from_parts(records, edges, Validation::Strict).is_ok());
    }

    #[test]
    fn resolve_main_follows_chains() {
        let records = vec![
            rec(1, RecordKind::Article, "Venice"),
            rec(3, RecordKind::Redirect, "La Serenissima"),
            rec(4, RecordKind::Redirect, "Serenissima"),
            rec(10, RecordKind::Category, "Cities"),
        ];
        let edges = vec![
            (1, 10, EdgeKind::BelongsTo),
            (3, 1, EdgeKind::Redirect),
            (4, 3, EdgeKind::Redirect),
        ];
        let g = KnowledgeGraph::from_parts(records, edges, Validation::Strict).unwrap();
        assert_eq!(g.resolve_main(NodeId(4)).unwrap(), NodeId(1));
        assert_eq!(g.resolve_main(NodeId(3)).unwrap(), NodeId(1));
        assert_eq!(g.resolve_main(NodeId(1)).unwrap(), NodeId(1));
        assert_eq!(g.resolve_main(NodeId(10)).unwrap(), NodeId(10));
    }

    #[test]
    fn resolve_main_detects_loops() {
        let records = vec![
            rec(3, RecordKind::Redirect, "A"),
            rec(4, RecordKind::Redirect, "B"),
        ];
        let edges = vec![(3, 4, EdgeKind::Redirect), (4, 3, EdgeKind::Redirect)];
        let g = KnowledgeGraph::from_parts(records, edges, Validation::Strict).unwrap();
        let err = g.resolve_main(NodeId(3)).unwrap_err();
        assert!(
            err.to_string().contains("redirect loop"),
            "unexpected error: {err}"
        );
    }

    #[test]
    fn undirected_neighbors_sees_both_directions() {
        let g = small_graph();
        let n1 = g.undirected_neighbors(NodeId(1), true).unwrap();
        // in-link from gondola, belongs-to cities; redirect from venezia excluded
        assert_eq!(n1, BTreeSet::from([NodeId(2), NodeId(10)]));
        let n1_with_redirects = g.undirected_neighbors(NodeId(1), false).unwrap();
        assert_eq!(
            n1_with_redirects,
            BTreeSet::from([NodeId(2), NodeId(3), NodeId(10)])
        );
    }

    #[test]
    fn undirected_neighbors_is_symmetric() {
        let g = small_graph();
        let ids: Vec<NodeId> = g.node_ids().collect();
        for &a in &ids {
            for &b in &ids {
                let an = g.undirected_neighbors(a, true).unwrap().contains(&b);
                let bn = g.undirected_neighbors(b, true).unwrap().contains(&a);
                assert_eq!(an, bn, "asymmetry between {a} and {b}");
            }
        }
    }

    #[test]
    fn induced_subgraph_keeps_inner_edges_only() {
        let g = small_graph();
        let keep = BTreeSet::from([NodeId(1), NodeId(2)]);
        let sub = g.induced_subgraph(&keep).unwrap();
        assert_eq!(sub.node_count(), 2);
        assert_eq!(sub.edge_count(), 1);
        assert!(sub.has_edge(NodeId(2), NodeId(1), EdgeKind::Link));
        // article 1 lost its category; relaxed validation accepts that
        assert!(sub.categories_of(NodeId(1)).is_empty());
    }

    #[test]
    fn induced_subgraph_is_idempotent() {
        let g = small_graph();
        let keep: BTreeSet<NodeId> = g.node_ids().collect();
        let sub = g.induced_subgraph(&keep).unwrap();
        let sub2 = sub.induced_subgraph(&keep).unwrap();
        assert_eq!(sub.node_count(), sub2.node_count());
        let e1: Vec<Edge> = sub.edges().copied().collect();
        let e2: Vec<Edge> = sub2.edges().copied().collect();
        assert_eq!(e1, e2);
    }

    #[test]
    fn induced_subgraph_rejects_unknown_nodes() {
        let g = small_graph();
        let keep = BTreeSet::from([NodeId(1), NodeId(999)]);
        assert!(matches!(
            g.induced_subgraph(&keep),
            Err(Error::UnknownNode(999))
        ));
    }

    #[test]
    fn tsv_round_trip() {
        use std::io::Write;
        let g = small_graph();
        let dir = tempfile::tempdir().unwrap();
        let nodes_path = dir.path().join("nodes.tsv");
        let edges_path = dir.path().join("edges.tsv");
        let mut nf = File::create(&nodes_path).unwrap();
        g.write_nodes_tsv(&mut nf).unwrap();
        nf.flush().unwrap();
        let mut ef = File::create(&edges_path).unwrap();
        g.write_edges_tsv(&mut ef).unwrap();
        ef.flush().unwrap();

        let g2 = KnowledgeGraph::load(&nodes_path, &edges_path).unwrap();
        assert_eq!(g2.node_count(), g.node_count());
        assert_eq!(g2.edge_count(), g.edge_count());
        assert!(g2.is_redirect(NodeId(3)));
    }

    #[test]
    fn jsonl_nodes_and_edges_parse() {
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let nodes_path = dir.path().join("nodes.jsonl");
        let edges_path = dir.path().join("edges.jsonl");
        let mut nf = File::create(&nodes_path).unwrap();
        writeln!(nf, r#"{{"id": 1, "kind": "article", "title": "Venice"}}"#).unwrap();
        writeln!(nf, r#"{{"id": 10, "kind": "category", "title": "Cities"}}"#).unwrap();
        let mut ef = File::create(&edges_path).unwrap();
        writeln!(ef, r#"{{"src": 1, "dst": 10, "kind": "belongs"}}"#).unwrap();
        let g = KnowledgeGraph::load(&nodes_path, &edges_path).unwrap();
        assert_eq!(g.node_count(), 2);
        assert!(g.has_edge(NodeId(1), NodeId(10), EdgeKind::BelongsTo));
    }

    #[test]
    fn malformed_tsv_reports_line() {
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let nodes_path = dir.path().join("nodes.tsv");
        let edges_path = dir.path().join("edges.tsv");
        let mut nf = File::create(&nodes_path).unwrap();
        writeln!(nf, "1\tarticle\tVenice").unwrap();
        writeln!(nf, "not-a-node").unwrap();
        File::create(&edges_path).unwrap();
        let err = KnowledgeGraph::load(&nodes_path, &edges_path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":2:"), "error should cite line 2: {msg}");
    }
}
