//! Positional phrase retrieval.
//!
//! Documents are scored by exact phrase counting: a document's score is the
//! total number of occurrences of the query phrases in its token stream, and
//! documents that match nothing are left out of the ranking entirely.
//! Precision at rank r keeps r as the denominator even when fewer than r
//! documents matched, so a query that finds nothing scores zero rather than
//! being skipped.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::kgraph::{KnowledgeGraph, NodeId};
use crate::linker::normalize;

/// Ranks at which per-rank precision is averaged into the quality score.
pub const DEFAULT_R_SET: [u32; 4] = [1, 5, 10, 15];

/// Token -> doc_id -> ascending token positions.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PhraseIndex {
    postings: BTreeMap<String, BTreeMap<String, Vec<u32>>>,
    doc_lengths: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedDoc {
    pub doc_id: String,
    pub score: f64,
}

impl PhraseIndex {
    pub fn build(corpus: &Corpus) -> PhraseIndex {
        let mut index = PhraseIndex::default();
        for doc in corpus.documents() {
            let tokens = normalize(&doc.extracted_text);
            index
                .doc_lengths
                .insert(doc.doc_id.clone(), tokens.len() as u32);
            for (pos, token) in tokens.into_iter().enumerate() {
                index
                    .postings
                    .entry(token)
                    .or_default()
                    .entry(doc.doc_id.clone())
                    .or_default()
                    .push(pos as u32);
            }
        }
        index
    }

    pub fn doc_count(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn contains_doc(&self, doc_id: &str) -> bool {
        self.doc_lengths.contains_key(doc_id)
    }

    /// Occurrences of an exact token phrase in one document. Overlapping
    /// occurrences each count.
    pub fn phrase_count(&self, doc_id: &str, phrase: &[String]) -> u64 {
        let Some(first) = phrase.first() else {
            return 0;
        };
        let Some(starts) = self.postings.get(first).and_then(|d| d.get(doc_id)) else {
            return 0;
        };
        let mut count = 0;
        'starts: for &start in starts {
            for (offset, token) in phrase.iter().enumerate().skip(1) {
                let want = start + offset as u32;
                let ok = self
                    .postings
                    .get(token)
                    .and_then(|d| d.get(doc_id))
                    .is_some_and(|positions| positions.binary_search(&want).is_ok());
                if !ok {
                    continue 'starts;
                }
            }
            count += 1;
        }
        count
    }

    /// Top-r documents by total phrase count, score descending then doc_id
    /// ascending. Zero-scoring documents never appear.
    pub fn search(&self, phrases: &[Vec<String>], r: usize) -> Result<Vec<RankedDoc>> {
        if r == 0 {
            return Err(Error::ZeroRank);
        }
        let phrases: Vec<&Vec<String>> = phrases.iter().filter(|p| !p.is_empty()).collect();
        if phrases.is_empty() {
            return Err(Error::NoQueryTerms);
        }
        // Only documents containing some first token of a phrase can score.
        let mut candidates: BTreeSet<&str> = BTreeSet::new();
        for phrase in &phrases {
            if let Some(docs) = self.postings.get(&phrase[0]) {
                candidates.extend(docs.keys().map(String::as_str));
            }
        }
        let mut ranked: Vec<RankedDoc> = candidates
            .into_iter()
            .filter_map(|doc_id| {
                let total: u64 = phrases.iter().map(|p| self.phrase_count(doc_id, p)).sum();
                (total > 0).then(|| RankedDoc {
                    doc_id: doc_id.to_string(),
                    score: total as f64,
                })
            })
            .collect();
        ranked.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.doc_id.cmp(&b.doc_id))
        });
        ranked.truncate(r);
        Ok(ranked)
    }

    /// Precision at each requested rank, computed from a single search at
    /// the deepest rank.
    pub fn per_r_precision(
        &self,
        phrases: &[Vec<String>],
        r_set: &[u32],
        expected: &BTreeSet<String>,
    ) -> Result<BTreeMap<u32, f64>> {
        let max_r = r_set.iter().copied().max().ok_or(Error::ZeroRank)? as usize;
        let ranked = self.search(phrases, max_r)?;
        Ok(r_set
            .iter()
            .map(|&r| (r, precision(&ranked, r as usize, expected)))
            .collect())
    }

    /// Mean precision over [`DEFAULT_R_SET`].
    pub fn quality(&self, phrases: &[Vec<String>], expected: &BTreeSet<String>) -> Result<f64> {
        let per_r = self.per_r_precision(phrases, &DEFAULT_R_SET, expected)?;
        Ok(per_r.values().sum::<f64>() / per_r.len() as f64)
    }

    pub fn to_writer<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(w, self).map_err(|e| Error::Json {
            path: "<index>".into(),
            line: 0,
            msg: e.to_string(),
        })
    }

    pub fn from_reader<R: Read>(r: R, path: &str) -> Result<PhraseIndex> {
        serde_json::from_reader(r).map_err(|e| Error::Json {
            path: path.into(),
            line: 0,
            msg: e.to_string(),
        })
    }
}

/// Fraction of the top r ranks filled by expected documents. The denominator
/// is always r: missing ranks count against the score.
pub fn precision(ranked: &[RankedDoc], r: usize, expected: &BTreeSet<String>) -> f64 {
    if r == 0 {
        return 0.0;
    }
    let hits = ranked
        .iter()
        .take(r)
        .filter(|d| expected.contains(&d.doc_id))
        .count();
    hits as f64 / r as f64
}

/// Normalized title phrases for a set of articles, sorted and deduplicated.
/// Titles that normalize to nothing contribute no phrase.
pub fn article_phrases(graph: &KnowledgeGraph, articles: &BTreeSet<NodeId>) -> Vec<Vec<String>> {
    let set: BTreeSet<Vec<String>> = articles
        .iter()
        .filter_map(|id| graph.node(*id).ok())
        .map(|node| normalize(node.label()))
        .filter(|tokens| !tokens.is_empty())
        .collect();
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn corpus_from(pairs: &[(&str, &str)]) -> Corpus {
        let mut corpus = Corpus::default();
        for (doc_id, text) in pairs {
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
        corpus
    }

    fn phrase(s: &str) -> Vec<String> {
        normalize(s)
    }

    fn expected(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn counts_exact_phrases_including_overlaps() {
        let corpus = corpus_from(&[("d1", "grand canal by the grand canal"), ("d2", "a a a")]);
        let index = PhraseIndex::build(&corpus);
        assert_eq!(index.phrase_count("d1", &phrase("grand canal")), 2);
        assert_eq!(index.phrase_count("d1", &phrase("canal by the grand")), 1);
        // word order matters: "canal grand" never occurs contiguously
        assert_eq!(index.phrase_count("d1", &phrase("canal grand")), 0);
        assert_eq!(index.phrase_count("d1", &phrase("rialto")), 0);
        assert_eq!(index.phrase_count("d2", &phrase("a a")), 2);
    }

    #[test]
    fn phrase_must_be_contiguous() {
        let corpus = corpus_from(&[("d1", "grand old canal")]);
        let index = PhraseIndex::build(&corpus);
        assert_eq!(index.phrase_count("d1", &phrase("grand canal")), 0);
    }

    #[test]
    fn search_sums_scores_and_drops_zeroes() {
        let corpus = corpus_from(&[
            ("d1", "gondola gondola venice"),
            ("d2", "gondola venice venice venice"),
            ("d3", "murano glass"),
        ]);
        let index = PhraseIndex::build(&corpus);
        let ranked = index
            .search(&[phrase("gondola"), phrase("venice")], 10)
            .unwrap();
        assert_eq!(ranked.len(), 2);
        assert_eq!(ranked[0].doc_id, "d2");
        assert_eq!(ranked[0].score, 4.0);
        assert_eq!(ranked[1].doc_id, "d1");
        assert_eq!(ranked[1].score, 3.0);
    }

    #[test]
    fn ties_break_by_doc_id_and_rank_truncates() {
        let corpus = corpus_from(&[("b", "venice"), ("a", "venice"), ("c", "venice")]);
        let index = PhraseIndex::build(&corpus);
        let ranked = index.search(&[phrase("venice")], 2).unwrap();
        assert_eq!(ranked.len(), 2);
        assert_eq!(ranked[0].doc_id, "a");
        assert_eq!(ranked[1].doc_id, "b");
    }

    #[test]
    fn empty_phrase_set_is_an_error() {
        let corpus = corpus_from(&[("d1", "venice")]);
        let index = PhraseIndex::build(&corpus);
        let err = index.search(&[], 5).unwrap_err();
        assert!(err.to_string().contains("no query terms"));
        let err = index.search(&[vec![]], 5).unwrap_err();
        assert!(err.to_string().contains("no query terms"));
    }

    #[test]
    fn zero_rank_is_an_error() {
        let corpus = corpus_from(&[("d1", "venice")]);
        let index = PhraseIndex::build(&corpus);
        assert!(index.search(&[phrase("venice")], 0).is_err());
    }

    #[test]
    fn precision_keeps_rank_as_denominator() {
        let ranked = vec![
            RankedDoc {
                doc_id: "d1".into(),
                score: 3.0,
            },
            RankedDoc {
                doc_id: "d9".into(),
                score: 1.0,
            },
        ];
        let exp = expected(&["d1", "d2"]);
        assert_eq!(precision(&ranked, 1, &exp), 1.0);
        assert_eq!(precision(&ranked, 5, &exp), 0.2);
        assert_eq!(precision(&ranked, 2, &exp), 0.5);
    }

    #[test]
    fn quality_averages_the_four_ranks() {
        // d1 is the single expected doc and the single match: precision is
        // 1, 1/5, 1/10, 1/15 at the four ranks.
        let corpus = corpus_from(&[("d1", "gondola"), ("d2", "murano")]);
        let index = PhraseIndex::build(&corpus);
        let q = index
            .quality(&[phrase("gondola")], &expected(&["d1"]))
            .unwrap();
        let want = (1.0 + 0.2 + 0.1 + 1.0 / 15.0) / 4.0;
        assert!((q - want).abs() < 1e-12);
    }

    #[test]
    fn index_round_trips_through_json() {
        let corpus = corpus_from(&[("d1", "grand canal"), ("d2", "murano glass")]);
        let index = PhraseIndex::build(&corpus);
        let mut buf = Vec::new();
        index.to_writer(&mut buf).unwrap();
        let reloaded = PhraseIndex::from_reader(buf.as_slice(), "index.json").unwrap();
        assert_eq!(reloaded.doc_count(), 2);
        assert_eq!(reloaded.phrase_count("d1", &phrase("grand canal")), 1);
        let a = index.search(&[phrase("grand canal")], 5).unwrap();
        let b = reloaded.search(&[phrase("grand canal")], 5).unwrap();
        assert_eq!(a, b);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn doc_text(alphabet: &'static [&'static str]) -> impl Strategy<Value = String> {
            proptest::collection::vec(proptest::sample::select(alphabet), 0..12)
                .prop_map(|tokens| tokens.join(" "))
        }

        const QUERY_ALPHABET: &[&str] = &["a", "b", "c"];
        const OTHER_ALPHABET: &[&str] = &["x", "y", "z"];

        proptest! {
            #[test]
            fn adding_a_non_matching_doc_changes_nothing(
                texts in proptest::collection::vec(doc_text(QUERY_ALPHABET), 1..6),
                extra in doc_text(OTHER_ALPHABET),
                phrase_tokens in proptest::collection::vec(
                    proptest::sample::select(QUERY_ALPHABET), 1..3),
                r in 1usize..8,
            ) {
                let pairs: Vec<(String, String)> = texts
                    .iter()
                    .enumerate()
                    .map(|(i, t)| (format!("d{i:02}"), t.clone()))
                    .collect();
                let mut base: Vec<(&str, &str)> =
                    pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
                let index = PhraseIndex::build(&corpus_from(&base));

                base.push(("zz_extra", extra.as_str()));
                let bigger = PhraseIndex::build(&corpus_from(&base));

                let phrases = vec![phrase_tokens.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
                let a = index.search(&phrases, r).unwrap();
                let b = bigger.search(&phrases, r).unwrap();
                prop_assert_eq!(a, b);
            }

            #[test]
            fn precision_and_quality_stay_in_unit_interval(
                texts in proptest::collection::vec(doc_text(QUERY_ALPHABET), 1..6),
                phrase_tokens in proptest::collection::vec(
                    proptest::sample::select(QUERY_ALPHABET), 1..3),
                n_expected in 0usize..4,
            ) {
                let pairs: Vec<(String, String)> = texts
                    .iter()
                    .enumerate()
                    .map(|(i, t)| (format!("d{i:02}"), t.clone()))
                    .collect();
                let base: Vec<(&str, &str)> =
                    pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
                let index = PhraseIndex::build(&corpus_from(&base));
                let exp: BTreeSet<String> =
                    (0..n_expected).map(|i| format!("d{i:02}")).collect();
                let phrases = vec![phrase_tokens.iter().map(|s| s.to_string()).collect::<Vec<_>>()];

                let per_r = index.per_r_precision(&phrases, &DEFAULT_R_SET, &exp).unwrap();
                for p in per_r.values() {
                    prop_assert!((0.0..=1.0).contains(p));
                }
                let q = index.quality(&phrases, &exp).unwrap();
                prop_assert!((0.0..=1.0).contains(&q));
            }
        }
    }
}
