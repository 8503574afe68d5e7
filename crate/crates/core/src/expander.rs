//! Cycle-filtered query expansion.
//!
//! Expansion features for a query are the titles of the articles sitting in
//! its cycles — restricted to configured cycle lengths and, optionally, to
//! cycles with enough categories or enough extra edges. The evaluation adds
//! those titles to the linked keywords as search phrases and averages
//! precision at each rank across queries, which is how a feature
//! configuration is compared against the unexpanded baseline.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::cycles::Cycle;
use crate::error::{Error, Result};
use crate::groundtruth::{GroundTruthEntry, Query};
use crate::kgraph::{KnowledgeGraph, NodeId};
use crate::retrieval::{article_phrases, PhraseIndex, DEFAULT_R_SET};

/// Which cycles supply expansion features.
///
/// `min_category_ratio` applies only to cycles of length ≥ 3; a length-2
/// cycle cannot contain a category, so the filter would empty it out
/// meaninglessly. `min_density` applies everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionConfig {
    pub lengths: BTreeSet<usize>,
    pub min_category_ratio: f64,
    pub min_density: f64,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig {
            lengths: [2, 3, 4, 5].into_iter().collect(),
            min_category_ratio: 0.0,
            min_density: 0.0,
        }
    }
}

impl ExpansionConfig {
    pub fn with_lengths<I: IntoIterator<Item = usize>>(lengths: I) -> Self {
        ExpansionConfig {
            lengths: lengths.into_iter().collect(),
            ..ExpansionConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() {
            return Err(Error::BadExpansionConfig("no cycle lengths selected".into()));
        }
        if let Some(&bad) = self.lengths.iter().find(|l| !(2..=5).contains(*l)) {
            return Err(Error::BadExpansionConfig(format!(
                "cycle length {bad} outside 2..=5"
            )));
        }
        for (name, value) in [
            ("min_category_ratio", self.min_category_ratio),
            ("min_density", self.min_density),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::BadExpansionConfig(format!(
                    "{name} {value} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Row label: the selected lengths joined like "2 & 3 & 4".
    pub fn label(&self) -> String {
        self.lengths
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(" & ")
    }

    fn selects(&self, cycle: &Cycle) -> bool {
        self.lengths.contains(&cycle.length)
            && (cycle.length < 3 || cycle.category_ratio >= self.min_category_ratio)
            && cycle.extra_edge_density >= self.min_density
    }
}

/// Union of the articles in every cycle the config selects. Categories are
/// never features, and neither are redirects — their titles are synonyms,
/// not topics.
pub fn select_features(
    graph: &KnowledgeGraph,
    cycles: &[Cycle],
    config: &ExpansionConfig,
) -> BTreeSet<NodeId> {
    cycles
        .iter()
        .filter(|c| config.selects(c))
        .flat_map(|c| c.articles(graph))
        .filter(|id| !graph.is_redirect(*id))
        .collect()
}

/// One query's expansion under a config.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionOutcome {
    pub query_id: String,
    pub features: BTreeSet<String>,
    pub per_r_precision: BTreeMap<u32, f64>,
}

/// One table row: a config's per-rank precision averaged over all queries.
/// Queries with no enumerated cycles at all are still averaged in (at their
/// unexpanded precision) and listed in `flagged`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigRow {
    pub label: String,
    pub per_r_precision: BTreeMap<u32, f64>,
    pub flagged: Vec<String>,
    pub outcomes: Vec<ExpansionOutcome>,
}

fn per_r_for_articles(
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

fn average_rows(rows: &[BTreeMap<u32, f64>]) -> BTreeMap<u32, f64> {
    DEFAULT_R_SET
        .iter()
        .map(|&r| {
            let total: f64 = rows.iter().map(|row| row.get(&r).copied().unwrap_or(0.0)).sum();
            (r, total / rows.len().max(1) as f64)
        })
        .collect()
}

fn entry_for<'a>(
    entries: &'a BTreeMap<String, GroundTruthEntry>,
    query: &Query,
) -> Result<&'a GroundTruthEntry> {
    entries.get(&query.query_id).ok_or_else(|| Error::BadQuery {
        query_id: query.query_id.clone(),
        msg: "missing ground-truth entry".into(),
    })
}

/// Evaluates one feature configuration across all queries.
pub fn evaluate_config(
    queries: &[Query],
    entries: &BTreeMap<String, GroundTruthEntry>,
    cycles_by_query: &BTreeMap<String, Vec<Cycle>>,
    config: &ExpansionConfig,
    graph: &KnowledgeGraph,
    index: &PhraseIndex,
) -> Result<ConfigRow> {
    config.validate()?;
    let evaluated: Vec<(ExpansionOutcome, bool)> = queries
        .par_iter()
        .map(|query| {
            let entry = entry_for(entries, query)?;
            let cycles = cycles_by_query.get(&query.query_id);
            let features = match cycles {
                Some(cycles) => select_features(graph, cycles, config),
                None => BTreeSet::new(),
            };
            let mut articles = entry.linked_keywords.clone();
            articles.extend(features.iter().copied());
            let per_r = per_r_for_articles(graph, index, &articles, &query.expected_docs);
            let outcome = ExpansionOutcome {
                query_id: query.query_id.clone(),
                features: features
                    .iter()
                    .filter_map(|id| graph.node(*id).ok())
                    .map(|n| n.label().to_string())
                    .collect(),
                per_r_precision: per_r,
            };
            Ok((outcome, cycles.is_none()))
        })
        .collect::<Result<_>>()?;

    let rows: Vec<BTreeMap<u32, f64>> = evaluated
        .iter()
        .map(|(o, _)| o.per_r_precision.clone())
        .collect();
    Ok(ConfigRow {
        label: config.label(),
        per_r_precision: average_rows(&rows),
        flagged: evaluated
            .iter()
            .filter(|(_, missing)| *missing)
            .map(|(o, _)| o.query_id.clone())
            .collect(),
        outcomes: evaluated.into_iter().map(|(o, _)| o).collect(),
    })
}

/// Per-rank precision of the unexpanded linked keywords, averaged over
/// queries.
pub fn baseline_row(
    queries: &[Query],
    entries: &BTreeMap<String, GroundTruthEntry>,
    graph: &KnowledgeGraph,
    index: &PhraseIndex,
) -> Result<ConfigRow> {
    let evaluated: Vec<ExpansionOutcome> = queries
        .par_iter()
        .map(|query| {
            let entry = entry_for(entries, query)?;
            let per_r =
                per_r_for_articles(graph, index, &entry.linked_keywords, &query.expected_docs);
            Ok(ExpansionOutcome {
                query_id: query.query_id.clone(),
                features: BTreeSet::new(),
                per_r_precision: per_r,
            })
        })
        .collect::<Result<_>>()?;
    let rows: Vec<BTreeMap<u32, f64>> =
        evaluated.iter().map(|o| o.per_r_precision.clone()).collect();
    Ok(ConfigRow {
        label: "baseline".into(),
        per_r_precision: average_rows(&rows),
        flagged: Vec::new(),
        outcomes: evaluated,
    })
}

/// The configurations a length set spawns for the summary table: each
/// length alone, then cumulative combinations ("2", "3", …, "2 & 3",
/// "2 & 3 & 4", …), all sharing the base config's filters.
pub fn config_family(base: &ExpansionConfig) -> Vec<ExpansionConfig> {
    let lengths: Vec<usize> = base.lengths.iter().copied().collect();
    let mut family: Vec<ExpansionConfig> = lengths
        .iter()
        .map(|&l| ExpansionConfig {
            lengths: [l].into_iter().collect(),
            ..base.clone()
        })
        .collect();
    for prefix in 2..=lengths.len() {
        family.push(ExpansionConfig {
            lengths: lengths[..prefix].iter().copied().collect(),
            ..base.clone()
        });
    }
    family
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Document};
    use crate::cycles::enumerate_cycles;
    use crate::kgraph::{EdgeKind, NodeRecord, RecordKind, Validation};

    fn rec(id: u64, kind: RecordKind, title: &str) -> NodeRecord {
        NodeRecord {
            id,
            kind,
            title: title.to_string(),
        }
    }

    fn ids(list: &[u64]) -> BTreeSet<NodeId> {
        list.iter().map(|&i| NodeId(i)).collect()
    }

    /// alpha(1) <-> beta(2), both in category 10; beta's title is the only
    /// phrase matching the expected doc.
    fn fixture() -> (KnowledgeGraph, PhraseIndex, Query, GroundTruthEntry) {
        let graph = KnowledgeGraph::from_parts(
            vec![
                rec(1, RecordKind::Article, "alpha"),
                rec(2, RecordKind::Article, "beta"),
                rec(10, RecordKind::Category, "stuff"),
            ],
            vec![
                (1, 2, EdgeKind::Link),
                (2, 1, EdgeKind::Link),
                (1, 10, EdgeKind::BelongsTo),
                (2, 10, EdgeKind::BelongsTo),
            ],
            Validation::Strict,
        )
        .unwrap();
        let mut corpus = Corpus::default();
        for (doc_id, text) in [("d1", "beta beta beta"), ("d2", "alpha decoy alpha")] {
            let mut raw_fields = BTreeMap::new();
            raw_fields.insert("text".to_string(), text.to_string());
            corpus
                .insert(Document {
                    doc_id: doc_id.to_string(),
                    raw_fields,
                    extracted_text: text.to_string(),
                })
                .unwrap();
        }
        let index = PhraseIndex::build(&corpus);
        let query = Query {
            query_id: "q1".into(),
            keywords: "alpha".into(),
            expected_docs: ["d1"].iter().map(|s| s.to_string()).collect(),
        };
        let entry = GroundTruthEntry {
            query_id: "q1".into(),
            linked_keywords: ids(&[1]),
            candidates: BTreeSet::new(),
            chosen: BTreeSet::new(),
            expansion_set: ids(&[1]),
            quality: 0.0,
            per_r_precision: BTreeMap::new(),
            rng_seed: 0,
        };
        (graph, index, query, entry)
    }

    #[test]
    fn config_validation() {
        assert!(ExpansionConfig::default().validate().is_ok());
        assert!(ExpansionConfig::with_lengths([]).validate().is_err());
        assert!(ExpansionConfig::with_lengths([6]).validate().is_err());
        let mut config = ExpansionConfig::default();
        config.min_density = 1.5;
        assert!(config.validate().is_err());
    }

    #[test]
    fn labels_join_lengths() {
        assert_eq!(ExpansionConfig::with_lengths([2]).label(), "2");
        assert_eq!(ExpansionConfig::with_lengths([3, 2]).label(), "2 & 3");
        assert_eq!(ExpansionConfig::default().label(), "2 & 3 & 4 & 5");
    }

    #[test]
    fn selects_only_configured_lengths_and_never_categories() {
        let (graph, _, _, _) = fixture();
        let cycles = enumerate_cycles(&graph, &ids(&[1]), 5).unwrap();
        // One 2-cycle (1,2) and one triangle (1,2,10).
        assert_eq!(cycles.len(), 2);

        let only2 = select_features(&graph, &cycles, &ExpansionConfig::with_lengths([2]));
        assert_eq!(only2, ids(&[1, 2]));
        let all = select_features(&graph, &cycles, &ExpansionConfig::default());
        assert_eq!(all, ids(&[1, 2]));
        assert!(!all.contains(&NodeId(10)));
    }

    #[test]
    fn category_ratio_filter_skips_category_free_triangles() {
        // Pure article triangle.
        let graph = KnowledgeGraph::from_parts(
            vec![
                rec(1, RecordKind::Article, "a"),
                rec(2, RecordKind::Article, "b"),
                rec(3, RecordKind::Article, "c"),
            ],
            vec![
                (1, 2, EdgeKind::Link),
                (2, 3, EdgeKind::Link),
                (3, 1, EdgeKind::Link),
            ],
            Validation::Relaxed,
        )
        .unwrap();
        let cycles = enumerate_cycles(&graph, &ids(&[1]), 5).unwrap();
        let mut config = ExpansionConfig::with_lengths([3]);
        config.min_category_ratio = 0.3;
        assert!(select_features(&graph, &cycles, &config).is_empty());
        config.min_category_ratio = 0.0;
        assert_eq!(select_features(&graph, &cycles, &config), ids(&[1, 2, 3]));
    }

    #[test]
    fn category_ratio_filter_spares_length_2() {
        let (graph, _, _, _) = fixture();
        let cycles = enumerate_cycles(&graph, &ids(&[1]), 5).unwrap();
        let mut config = ExpansionConfig::with_lengths([2]);
        config.min_category_ratio = 0.3;
        assert_eq!(select_features(&graph, &cycles, &config), ids(&[1, 2]));
    }

    #[test]
    fn nested_length_sets_give_nested_features() {
        let (graph, _, _, _) = fixture();
        let cycles = enumerate_cycles(&graph, &ids(&[1]), 5).unwrap();
        let mut previous = BTreeSet::new();
        for lengths in [vec![2], vec![2, 3], vec![2, 3, 4], vec![2, 3, 4, 5]] {
            let config = ExpansionConfig::with_lengths(lengths);
            let features = select_features(&graph, &cycles, &config);
            assert!(features.is_superset(&previous));
            previous = features;
        }
    }

    #[test]
    fn expansion_lifts_top_1_over_baseline() {
        let (graph, index, query, entry) = fixture();
        let queries = vec![query];
        let mut entries = BTreeMap::new();
        entries.insert("q1".to_string(), entry);
        let cycles = enumerate_cycles(&graph, &ids(&[1]), 5).unwrap();
        let mut by_query = BTreeMap::new();
        by_query.insert("q1".to_string(), cycles);

        let base = baseline_row(&queries, &entries, &graph, &index).unwrap();
        assert_eq!(base.per_r_precision[&1], 0.0);

        let expanded = evaluate_config(
            &queries,
            &entries,
            &by_query,
            &ExpansionConfig::with_lengths([2]),
            &graph,
            &index,
        )
        .unwrap();
        assert_eq!(expanded.per_r_precision[&1], 1.0);
        assert!(expanded.flagged.is_empty());
        assert_eq!(
            expanded.outcomes[0].features,
            ["alpha", "beta"].iter().map(|s| s.to_string()).collect()
        );
    }

    #[test]
    fn zero_selected_features_equals_baseline() {
        let (graph, index, query, entry) = fixture();
        let queries = vec![query];
        let mut entries = BTreeMap::new();
        entries.insert("q1".to_string(), entry);
        let cycles = enumerate_cycles(&graph, &ids(&[1]), 5).unwrap();
        let mut by_query = BTreeMap::new();
        by_query.insert("q1".to_string(), cycles);

        // The triangle fails the ratio filter and no other length-3 exists.
        let mut config = ExpansionConfig::with_lengths([3]);
        config.min_category_ratio = 0.5;
        let row = evaluate_config(&queries, &entries, &by_query, &config, &graph, &index).unwrap();
        let base = baseline_row(&queries, &entries, &graph, &index).unwrap();
        assert_eq!(row.per_r_precision, base.per_r_precision);
        assert!(row.flagged.is_empty());
    }

    #[test]
    fn query_without_cycles_is_flagged_at_baseline_precision() {
        let (graph, index, query, entry) = fixture();
        let queries = vec![query];
        let mut entries = BTreeMap::new();
        entries.insert("q1".to_string(), entry);
        let by_query = BTreeMap::new();

        let row = evaluate_config(
            &queries,
            &entries,
            &by_query,
            &ExpansionConfig::default(),
            &graph,
            &index,
        )
        .unwrap();
        let base = baseline_row(&queries, &entries, &graph, &index).unwrap();
        assert_eq!(row.per_r_precision, base.per_r_precision);
        assert_eq!(row.flagged, vec!["q1".to_string()]);
    }

    #[test]
    fn family_is_singles_then_cumulative() {
        let base = ExpansionConfig::default();
        let labels: Vec<String> = config_family(&base).iter().map(|c| c.label()).collect();
        assert_eq!(
            labels,
            vec!["2", "3", "4", "5", "2 & 3", "2 & 3 & 4", "2 & 3 & 4 & 5"]
        );
    }

    #[test]
    fn missing_entry_is_an_error() {
        let (graph, index, query, _) = fixture();
        let err = baseline_row(&[query], &BTreeMap::new(), &graph, &index).unwrap_err();
        assert!(err.to_string().contains("missing ground-truth entry"));
    }
}
