//! Assembling a query graph whose expansion set splits into one hub
//! component and four satellites, then checking the component census and
//! the largest-component metrics against hand-worked values.

use std::collections::{BTreeMap, BTreeSet};

use cyclex_core::cycles::connected_components;
use cyclex_core::groundtruth::{
    assemble_query_graph, component_metrics, GroundTruthEntry, Role,
};
use cyclex_core::kgraph::{
    EdgeKind, KnowledgeGraph, NodeId, NodeRecord, RecordKind, Validation,
};

fn ids(list: &[u64]) -> BTreeSet<NodeId> {
    list.iter().map(|&id| NodeId(id)).collect()
}

/// Articles 1-3 share a category hub and link in a chain; articles 4-7 each
/// sit alone with a private category; article 8 links 4 to the outside world
/// but never enters the expansion set; 9 redirects to 2.
fn main_graph() -> KnowledgeGraph {
    let mut records = Vec::new();
    for id in 1..=8u64 {
        records.push(NodeRecord {
            id,
            kind: RecordKind::Article,
            title: format!("topic {id}"),
        });
    }
    records.push(NodeRecord {
        id: 9,
        kind: RecordKind::Redirect,
        title: "topic two alias".into(),
    });
    for (id, name) in [
        (100, "hub"),
        (101, "hub annex"),
        (104, "island four"),
        (105, "island five"),
        (106, "island six"),
        (107, "island seven"),
        (108, "outside"),
    ] {
        records.push(NodeRecord {
            id,
            kind: RecordKind::Category,
            title: name.into(),
        });
    }
    let edges = vec![
        (1, 2, EdgeKind::Link),
        (2, 3, EdgeKind::Link),
        (4, 8, EdgeKind::Link),
        (8, 4, EdgeKind::Link),
        (9, 2, EdgeKind::Redirect),
        (1, 100, EdgeKind::BelongsTo),
        (2, 100, EdgeKind::BelongsTo),
        (3, 100, EdgeKind::BelongsTo),
        (3, 101, EdgeKind::BelongsTo),
        (4, 104, EdgeKind::BelongsTo),
        (5, 105, EdgeKind::BelongsTo),
        (6, 106, EdgeKind::BelongsTo),
        (7, 107, EdgeKind::BelongsTo),
        (8, 108, EdgeKind::BelongsTo),
        (101, 100, EdgeKind::Inside),
    ];
    KnowledgeGraph::from_parts(records, edges, Validation::Strict).expect("main graph is valid")
}

fn entry() -> GroundTruthEntry {
    GroundTruthEntry {
        query_id: "shape".into(),
        linked_keywords: ids(&[1, 9]),
        candidates: ids(&[3, 4, 5, 6, 7]),
        chosen: ids(&[3, 4, 5, 6, 7]),
        expansion_set: ids(&[1, 3, 4, 5, 6, 7, 9]),
        quality: 0.0,
        per_r_precision: BTreeMap::new(),
        rng_seed: 0,
    }
}

#[test]
fn assembly_gathers_mains_and_categories_but_nothing_else() {
    let graph = main_graph();
    let query_graph = assemble_query_graph(&entry(), &graph).expect("assembly succeeds");

    // Expansion set, the redirect's main article, and every member's
    // categories; article 8 and its category stay out.
    let want = ids(&[1, 2, 3, 4, 5, 6, 7, 9, 100, 101, 104, 105, 106, 107]);
    let got: BTreeSet<NodeId> = query_graph.graph.node_ids().collect();
    assert_eq!(got, want);

    let roles = &query_graph.node_roles;
    assert_eq!(roles[&NodeId(1)], Role::QueryArticle);
    assert_eq!(roles[&NodeId(9)], Role::QueryArticle);
    assert_eq!(roles[&NodeId(2)], Role::MainArticle);
    for id in [3, 4, 5, 6, 7] {
        assert_eq!(roles[&NodeId(id)], Role::ChosenArticle, "article {id}");
    }
    for id in [100, 101, 104, 105, 106, 107] {
        assert_eq!(roles[&NodeId(id)], Role::Category, "category {id}");
    }

    // Induced edges survive, edges to excluded nodes do not.
    let sub = &query_graph.graph;
    assert!(sub.has_edge(NodeId(1), NodeId(2), EdgeKind::Link));
    assert!(sub.has_edge(NodeId(9), NodeId(2), EdgeKind::Redirect));
    assert!(sub.has_edge(NodeId(101), NodeId(100), EdgeKind::Inside));
    assert!(!sub.has_edge(NodeId(4), NodeId(8), EdgeKind::Link));
    assert_eq!(sub.edge_count(), 12);
}

#[test]
fn component_census_finds_one_hub_and_four_satellites() {
    let graph = main_graph();
    let query_graph = assemble_query_graph(&entry(), &graph).expect("assembly succeeds");

    let components = connected_components(&query_graph.graph);
    assert_eq!(components.len(), 5);
    // Largest first: the redirect edge pulls 9 into the hub alongside its
    // main article. Satellites follow in smallest-member order.
    assert_eq!(components[0], ids(&[1, 2, 3, 9, 100, 101]));
    assert_eq!(components[1], ids(&[4, 104]));
    assert_eq!(components[2], ids(&[5, 105]));
    assert_eq!(components[3], ids(&[6, 106]));
    assert_eq!(components[4], ids(&[7, 107]));
}

#[test]
fn hub_metrics_match_hand_computed_fractions() {
    let graph = main_graph();
    let query_graph = assemble_query_graph(&entry(), &graph).expect("assembly succeeds");

    let metrics = component_metrics(&query_graph);
    let tol = 1e-12;
    // Hub holds 6 of 14 nodes: articles 1, 2, 3, 9 and categories 100, 101.
    assert!((metrics.pct_size - 6.0 / 14.0).abs() <= tol, "pct_size {}", metrics.pct_size);
    // Both query articles (1 and the redirect 9) land inside.
    assert_eq!(metrics.pct_query, 1.0);
    assert!((metrics.pct_articles - 4.0 / 6.0).abs() <= tol);
    assert!((metrics.pct_categories - 2.0 / 6.0).abs() <= tol);
    // Two query articles plus one chosen article, over the two query articles.
    assert!((metrics.expansion_ratio - 1.5).abs() <= tol);
}
