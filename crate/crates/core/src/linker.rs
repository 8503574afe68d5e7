//! Entity linking against article titles.
//!
//! Text and titles share one normal form: lowercase tokens split on runs of
//! non-alphanumeric characters, no stemming. Linking scans token windows
//! longest-first and consumes matched tokens, so "murano glass" wins over
//! "murano" plus "glass". A window matches an article title either verbatim
//! or through a single synonym substitution, where the synonyms of a term are
//! the titles of redirects pointing at the article carrying that term as its
//! title. Matched redirect titles resolve to their main article.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::corpus::Corpus;
use crate::error::Result;
use crate::kgraph::{KnowledgeGraph, NodeId};

/// Synonym expansions kept per term. Prolific redirect sets (common for
/// popular pages) would otherwise blow up the match dictionary.
pub const MAX_SYNONYMS_PER_TERM: usize = 20;

/// Lowercases and splits on non-alphanumeric runs. Unicode-aware on both
/// counts; empty tokens never appear.
pub fn normalize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Titles of redirects pointing directly at the article titled `term_tokens`,
/// ascending by redirect id, capped at [`MAX_SYNONYMS_PER_TERM`]. Unknown
/// terms have no synonyms.
pub fn synonyms(term_tokens: &[String], graph: &KnowledgeGraph) -> Vec<Vec<String>> {
    let norm = term_tokens.join(" ");
    let Some(article) = graph.article_by_normalized_title(&norm) else {
        return Vec::new();
    };
    graph
        .redirects_to(article)
        .into_iter()
        .take(MAX_SYNONYMS_PER_TERM)
        .map(|r| match graph.node(r) {
            Ok(node) => normalize(node.label()),
            Err(_) => Vec::new(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchedSpan {
    /// Token offset of the first matched token.
    pub start: usize,
    /// Token offset one past the last matched token.
    pub end: usize,
    /// The article whose title (or synonym phrase of it) the span equals.
    /// May be a redirect; [`LinkResult::articles`] holds the resolved mains.
    pub article: NodeId,
}

#[derive(Debug, Clone, Default)]
pub struct LinkResult {
    /// Main articles the text mentions, after redirect resolution.
    pub articles: BTreeSet<NodeId>,
    /// Non-overlapping matched windows, ascending by start offset.
    pub matched_spans: Vec<MatchedSpan>,
}

#[derive(Debug, Clone, Copy, Default)]
struct DictEntry {
    /// Article whose normalized title equals the phrase.
    direct: Option<NodeId>,
    /// Smallest article whose title becomes the phrase after one synonym
    /// substitution. Direct matches take precedence at link time.
    variant: Option<NodeId>,
}

/// Immutable match dictionary built once per graph; `link` calls are pure.
pub struct Linker<'g> {
    graph: &'g KnowledgeGraph,
    dict: HashMap<String, DictEntry>,
    max_window: usize,
    /// resolve_main is precomputed so linking itself cannot fail.
    mains: HashMap<NodeId, NodeId>,
}

impl<'g> Linker<'g> {
    pub fn build(graph: &'g KnowledgeGraph) -> Result<Linker<'g>> {
        let mut dict: HashMap<String, DictEntry> = HashMap::new();
        let mut max_window = 0;
        let mut mains = HashMap::new();

        for article in graph.articles() {
            mains.insert(article.id, graph.resolve_main(article.id)?);
            if article.normalized_title.is_empty() {
                continue;
            }
            let tokens = normalize(&article.title);
            max_window = max_window.max(tokens.len());
            dict.entry(article.normalized_title.clone())
                .or_default()
                .direct = Some(article.id);

            // Variant phrases: the title with one contiguous token run
            // replaced by a synonym of that run.
            for i in 0..tokens.len() {
                for j in (i + 1)..=tokens.len() {
                    let run = &tokens[i..j];
                    for syn in synonyms(run, graph) {
                        if syn.is_empty() {
                            continue;
                        }
                        let mut phrase_tokens = Vec::with_capacity(tokens.len());
                        phrase_tokens.extend_from_slice(&tokens[..i]);
                        phrase_tokens.extend(syn.iter().cloned());
                        phrase_tokens.extend_from_slice(&tokens[j..]);
                        max_window = max_window.max(phrase_tokens.len());
                        let phrase = phrase_tokens.join(" ");
                        let entry = dict.entry(phrase).or_default();
                        match entry.variant {
                            Some(prev) if prev <= article.id => {}
                            _ => entry.variant = Some(article.id),
                        }
                    }
                }
            }
        }

        Ok(Linker {
            graph,
            dict,
            max_window,
            mains,
        })
    }

    pub fn graph(&self) -> &KnowledgeGraph {
        self.graph
    }

    fn lookup(&self, phrase: &str) -> Option<NodeId> {
        self.dict
            .get(phrase)
            .and_then(|e| e.direct.or(e.variant))
    }

    /// Greedy longest-match scan. Longer windows win; at equal length the
    /// leftmost window wins; matched tokens are consumed and never rematched.
    pub fn link(&self, text: &str) -> LinkResult {
        let tokens = normalize(text);
        let n = tokens.len();
        let mut consumed = vec![false; n];
        let mut spans = Vec::new();

        let top = self.max_window.min(n);
        for w in (1..=top).rev() {
            for start in 0..=(n - w) {
                let end = start + w;
                if consumed[start..end].iter().any(|&c| c) {
                    continue;
                }
                let phrase = tokens[start..end].join(" ");
                if let Some(article) = self.lookup(&phrase) {
                    consumed[start..end].iter_mut().for_each(|c| *c = true);
                    spans.push(MatchedSpan {
                        start,
                        end,
                        article,
                    });
                }
            }
        }

        spans.sort_by_key(|s| s.start);
        let articles = spans
            .iter()
            .map(|s| *self.mains.get(&s.article).unwrap_or(&s.article))
            .collect();
        LinkResult {
            articles,
            matched_spans: spans,
        }
    }
}

/// One-shot convenience over [`Linker::build`] + [`Linker::link`].
pub fn link(text: &str, graph: &KnowledgeGraph) -> Result<LinkResult> {
    Ok(Linker::build(graph)?.link(text))
}

/// Links every document. Returns per-document main-article sets keyed by
/// doc_id plus the union over the corpus.
pub fn link_documents(
    corpus: &Corpus,
    graph: &KnowledgeGraph,
) -> Result<(BTreeMap<String, BTreeSet<NodeId>>, BTreeSet<NodeId>)> {
    let linker = Linker::build(graph)?;
    let mut per_doc = BTreeMap::new();
    let mut union = BTreeSet::new();
    for doc in corpus.documents() {
        let result = linker.link(&doc.extracted_text);
        union.extend(result.articles.iter().copied());
        per_doc.insert(doc.doc_id.clone(), result.articles);
    }
    Ok((per_doc, union))
}
